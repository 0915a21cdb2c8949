"""Simultaneous polynomial root refinement (Aberth–Ehrlich) in MPC arithmetic."""

from __future__ import annotations

import gmpy2
from gmpy2 import mpc, mpfr

from .errors import NumericFailure
from .hp import precision, to_mpfr
from .poly import Polynomial

GUARD_BITS = 32


def scaled_residual(P: Polynomial, z) -> mpfr:
    """|P(z)| / max(1, sum |p_k| |z|^k): backward-error style residual."""
    acc = mpc(0)
    mag = mpfr(0)
    az = abs(z)
    for c in reversed(P.hp_coeffs()):
        acc = acc * z + c
        mag = mag * az + abs(c)
    return abs(acc) / max(mpfr(1), mag)


def _initial_guesses(P: Polynomial) -> list:
    d = P.degree
    cs = P.hp_coeffs()
    # Fujiwara-type bound on the root moduli, then points on that circle with
    # an irrational angular offset so no guess is symmetric to another.
    lead = abs(cs[-1])
    bound = 2 * max((abs(cs[d - k]) / lead) ** (mpfr(1) / k) for k in range(1, d + 1))
    r = bound / 2 if bound > 0 else mpfr(1)
    two_pi = 2 * gmpy2.const_pi()
    return [r * gmpy2.exp(mpc(0, two_pi * k / d + mpfr("0.4"))) for k in range(d)]


def aberth_roots(P: Polynomial, prec: int, max_iter: int | None = None):
    """All roots of P (degree >= 1) with residual diagnostics.

    Iterates at ``prec + GUARD_BITS`` and returns ``(roots, max_residual)``
    where the residual is :func:`scaled_residual`.  The target is
    ``2^(-prec/2)``; failing to reach it raises :class:`NumericFailure`
    carrying the best residual seen.
    """
    d = P.degree
    if d < 1:
        return [], mpfr(0)
    work = prec + GUARD_BITS
    with precision(work):
        target = mpfr(2) ** (-(prec // 2))
        if d == 1:
            root = mpc(to_mpfr(-P[0] / P[1]))
            return [root], scaled_residual(P, root)
        dP = P.derivative()
        zs = _initial_guesses(P)
        budget = max_iter or (200 + 20 * d + work // 4)
        best, best_zs = None, list(zs)
        tight = mpfr(2) ** (-(work - 8))
        floor = mpfr(2) ** (-(work - 16))
        frozen = [False] * d
        for _ in range(budget):
            for i in range(d):
                if frozen[i]:
                    continue
                zi = zs[i]
                p = P.eval_hp(zi)
                if p == 0:
                    frozen[i] = True
                    continue
                ratio = p / dP.eval_hp(zi)
                s = mpc(0)
                for j in range(d):
                    if j != i:
                        s += 1 / (zi - zs[j])
                step = ratio / (1 - ratio * s)
                zs[i] = zi - step
                if abs(step) <= tight * max(mpfr(1), abs(zs[i])):
                    frozen[i] = True
            res = max(scaled_residual(P, z) for z in zs)
            if gmpy2.is_finite(res) and (best is None or res < best):
                best, best_zs = res, list(zs)
            if all(frozen) or (best is not None and best <= floor):
                break
        zs = best_zs
        if not gmpy2.is_finite(best) or best >= target or any(
            not (gmpy2.is_finite(z.real) and gmpy2.is_finite(z.imag)) for z in zs
        ):
            raise NumericFailure(
                f"root refinement did not reach residual 2^-{prec // 2} "
                f"(degree {d}, best {float(best) if best is not None else 'n/a'})",
                best_residual=best,
            )
        zs = [_clean(z, work) for z in zs]
        zs.sort(key=lambda z: (abs(z), z.real, z.imag))
        return zs, best


def _clean(z, bits):
    """Flush imaginary parts at roundoff level so real roots compare equal."""
    if abs(z.imag) <= abs(z) * mpfr(2) ** (-(bits - 16)):
        return mpc(z.real, 0)
    return z
