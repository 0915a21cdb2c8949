"""Exact univariate polynomials over the rationals (lowest degree first)."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable

from gmpy2 import mpc, mpq

from .hp import current_precision

# Primes for the modular coprimality certificate.
_PRIMES = (2**61 - 1, 2**31 - 1, 1_000_000_007, 998_244_353)


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, str):
        return Fraction(c.strip())
    return Fraction(c)


class Polynomial:
    """Immutable polynomial with ``Fraction`` coefficients.

    ``coeffs[k]`` is the coefficient of ``z**k``; trailing zeros are stripped,
    so the zero polynomial has ``coeffs == ()`` and ``degree == -1``.
    """

    __slots__ = ("coeffs", "_hp_cache")

    def __init__(self, coeffs: Iterable = ()):
        cs = [_as_fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs: tuple[Fraction, ...] = tuple(cs)
        self._hp_cache: dict[int, list] = {}

    @classmethod
    def monomial(cls, k: int, c=1) -> "Polynomial":
        return cls([0] * k + [c])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def lead(self) -> Fraction:
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    @property
    def order(self) -> int | None:
        """Index of the lowest nonzero coefficient (None for the zero polynomial)."""
        for k, c in enumerate(self.coeffs):
            if c:
                return k
        return None

    def is_zero(self) -> bool:
        return not self.coeffs

    def __getitem__(self, k: int) -> Fraction:
        if 0 <= k < len(self.coeffs):
            return self.coeffs[k]
        return Fraction(0)

    def __len__(self) -> int:
        return len(self.coeffs)

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self.coeffs == other.coeffs
        if isinstance(other, (int, Fraction)):
            return self.coeffs == Polynomial([other]).coeffs
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        return f"Polynomial({[str(c) for c in self.coeffs]})"

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for k, c in enumerate(self.coeffs):
            if c == 0:
                continue
            if k == 0:
                terms.append(str(c))
            elif k == 1:
                terms.append(f"{c}*z")
            else:
                terms.append(f"{c}*z^{k}")
        return " + ".join(terms)

    def __neg__(self) -> "Polynomial":
        return Polynomial(-c for c in self.coeffs)

    def __add__(self, other) -> "Polynomial":
        other = _coerce(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return Polynomial(self[k] + other[k] for k in range(n))

    __radd__ = __add__

    def __sub__(self, other) -> "Polynomial":
        return self + (-_coerce(other))

    def __rsub__(self, other) -> "Polynomial":
        return _coerce(other) - self

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, (int, Fraction)):
            return Polynomial(c * other for c in self.coeffs)
        other = _coerce(other)
        if self.is_zero() or other.is_zero():
            return Polynomial()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return Polynomial(out)

    __rmul__ = __mul__

    def __pow__(self, e: int) -> "Polynomial":
        if e < 0:
            raise ValueError("negative power")
        result, base = Polynomial([1]), self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def __divmod__(self, other: "Polynomial"):
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        dq = len(rem) - len(other.coeffs)
        if dq < 0:
            return Polynomial(), self
        quot = [Fraction(0)] * (dq + 1)
        lead = other.lead
        for k in range(dq, -1, -1):
            c = rem[k + other.degree] / lead
            quot[k] = c
            if c:
                for j, b in enumerate(other.coeffs):
                    rem[k + j] -= c * b
        return Polynomial(quot), Polynomial(rem[: other.degree])

    def __floordiv__(self, other: "Polynomial") -> "Polynomial":
        return divmod(self, other)[0]

    def __mod__(self, other: "Polynomial") -> "Polynomial":
        return divmod(self, other)[1]

    def __call__(self, x):
        acc = Fraction(0) if isinstance(x, (int, Fraction)) else 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def scale(self, c) -> "Polynomial":
        return self * _as_fraction(c)

    def shift_down(self, k: int) -> "Polynomial":
        """Divide by z**k; the low coefficients must vanish."""
        if any(self.coeffs[:k]):
            raise ValueError(f"polynomial not divisible by z^{k}")
        return Polynomial(self.coeffs[k:])

    def monic(self) -> "Polynomial":
        return self * (1 / self.lead) if self.coeffs else self

    def derivative(self) -> "Polynomial":
        return Polynomial(k * c for k, c in enumerate(self.coeffs) if k)

    def truncate(self, n: int) -> "Polynomial":
        """Terms of degree <= n."""
        return Polynomial(self.coeffs[: n + 1])

    def integer_form(self) -> tuple[Fraction, list[int]]:
        """Return (content, ints) with self == content * ints and ints primitive."""
        if not self.coeffs:
            return Fraction(0), []
        den = math.lcm(*(c.denominator for c in self.coeffs))
        ints = [c.numerator * (den // c.denominator) for c in self.coeffs]
        g = math.gcd(*ints)
        if ints[-1] < 0:
            g = -g
        return Fraction(g, den), [v // g for v in ints]

    def to_strings(self) -> list[str]:
        return [str(c) for c in self.coeffs]

    def hp_coeffs(self) -> list:
        """Coefficients as mpc at the current precision (cached per precision)."""
        bits = current_precision()
        cached = self._hp_cache.get(bits)
        if cached is None:
            cached = [mpc(mpq(c.numerator, c.denominator)) for c in self.coeffs]
            self._hp_cache[bits] = cached
        return cached

    def eval_hp(self, z) -> mpc:
        acc = mpc(0)
        for c in reversed(self.hp_coeffs()):
            acc = acc * z + c
        return acc


def _coerce(x) -> Polynomial:
    if isinstance(x, Polynomial):
        return x
    return Polynomial([x])


# -- integer polynomial helpers (lowest degree first) -------------------------


def _trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _primitive(a: list[int]) -> list[int]:
    if not a:
        return a
    g = math.gcd(*a)
    if a[-1] < 0:
        g = -g
    return [v // g for v in a]


def _prem(a: list[int], b: list[int]) -> list[int]:
    """Pseudo-remainder of a by b over the integers."""
    r = list(a)
    db, lb = len(b) - 1, b[-1]
    while len(r) - 1 >= db and r:
        shift = len(r) - 1 - db
        lr = r[-1]
        r = [lb * v for v in r]
        for j, bv in enumerate(b):
            r[shift + j] -= lr * bv
        _trim(r)
    return r


def poly_gcd(a: Polynomial, b: Polynomial) -> Polynomial:
    """Monic gcd of two rational polynomials (primitive remainder sequence)."""
    if a.is_zero():
        return b.monic()
    if b.is_zero():
        return a.monic()
    x = a.integer_form()[1]
    y = b.integer_form()[1]
    if len(x) < len(y):
        x, y = y, x
    while y:
        r = _primitive(_prem(x, y))
        x, y = y, r
    return Polynomial(x).monic()


def _gcd_degree_mod(a: list[int], b: list[int], p: int) -> int:
    a = _trim([v % p for v in a])
    b = _trim([v % p for v in b])
    while b:
        inv = pow(b[-1], -1, p)
        while len(a) >= len(b) and a:
            c = a[-1] * inv % p
            shift = len(a) - len(b)
            for j, bv in enumerate(b):
                a[shift + j] = (a[shift + j] - c * bv) % p
            _trim(a)
        a, b = b, a
    return len(a) - 1


def is_coprime(a: Polynomial, b: Polynomial) -> bool:
    """Exact coprimality test.

    A gcd of degree 0 modulo a prime that divides neither leading coefficient
    certifies coprimality over Q; anything else falls back to :func:`poly_gcd`.
    """
    if a.is_zero() or b.is_zero():
        other = b if a.is_zero() else a
        return other.degree == 0
    x = a.integer_form()[1]
    y = b.integer_form()[1]
    for p in _PRIMES:
        if x[-1] % p and y[-1] % p:
            if _gcd_degree_mod(x, y, p) == 0:
                return True
            break
    return poly_gcd(a, b).degree == 0
