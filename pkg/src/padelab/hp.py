"""High-precision floating point helpers built on gmpy2.

Exact quantities live in ``fractions.Fraction``; everything geometric
(moduli, roots, grid evaluations) is done in MPFR/MPC numbers at a
configurable binary precision.  gmpy2 contexts are thread local, so every
entry point that does floating work wraps itself in :func:`precision`.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from fractions import Fraction
from numbers import Rational

import gmpy2
from gmpy2 import mpc, mpfr, mpq

DEFAULT_PRECISION = 256
MIN_PRECISION = 64

INF = mpfr("inf")


@contextmanager
def precision(bits: int = DEFAULT_PRECISION):
    if bits < MIN_PRECISION:
        raise ValueError(f"precision must be at least {MIN_PRECISION} bits, got {bits}")
    with gmpy2.context(gmpy2.get_context(), precision=bits, real_prec=bits, imag_prec=bits) as ctx:
        yield ctx


def current_precision() -> int:
    return gmpy2.get_context().precision


def to_mpfr(x) -> mpfr:
    if isinstance(x, Fraction):
        return mpfr(mpq(x.numerator, x.denominator))
    if isinstance(x, Rational) and not isinstance(x, bool):
        return mpfr(mpq(x))
    if isinstance(x, str):
        return mpfr(Fraction(x)) if "/" in x else mpfr(x)
    return mpfr(x)


def to_mpc(z) -> mpc:
    if isinstance(z, mpc):
        return mpc(z)
    if isinstance(z, complex):
        return mpc(z)
    if isinstance(z, (tuple, list)):
        re, im = z
        return mpc(to_mpfr(re), to_mpfr(im))
    return mpc(to_mpfr(z), 0)


def abs_root(x: Fraction, n: int) -> mpfr:
    """|x|^(1/n) in the current precision (0 for x == 0)."""
    if x == 0:
        return mpfr(0)
    return abs(to_mpfr(x)) ** (mpfr(1) / n)


def is_finite(x) -> bool:
    return bool(gmpy2.is_finite(mpfr(x)))


def digits_for(bits: int) -> int:
    """Significant decimal digits written for a value carried at ``bits``.

    Four digits below the full decimal equivalent, so the printed string is
    stable under the last-bit noise of the working precision.
    """
    return max(6, int(bits * math.log10(2)) - 4)


def fmt_real(x, ndigits: int | None = None) -> str:
    """Scientific notation, round-to-nearest-even at ``ndigits`` significant digits."""
    x = mpfr(x)
    if gmpy2.is_nan(x):
        return "nan"
    if gmpy2.is_infinite(x):
        return "inf" if x > 0 else "-inf"
    if ndigits is None:
        ndigits = digits_for(x.precision)
    if x == 0:
        return "0." + "0" * (ndigits - 1) + "e+00"
    mant, exp, _ = gmpy2.digits(x, 10, ndigits)
    sign = ""
    if mant.startswith("-"):
        sign, mant = "-", mant[1:]
    e = exp - 1
    return f"{sign}{mant[0]}.{mant[1:]}e{'+' if e >= 0 else '-'}{abs(e):02d}"


def fmt_complex(z, ndigits: int | None = None) -> str:
    z = mpc(z)
    return f"{fmt_real(z.real, ndigits)}{'+' if z.imag >= 0 else '-'}{fmt_real(abs(z.imag), ndigits)}j"
