"""Exact Padé table entries, block structure, denominator normalization and
the consecutive-difference identities along a ray."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import gmpy2
from gmpy2 import mpc, mpfr

from .errors import (
    CapabilityError,
    DomainError,
    InvariantViolation,
    ParameterError,
    PoleProximityError,
    ScheduleError,
)
from .hp import DEFAULT_PRECISION, precision, to_mpc, to_mpfr
from .linalg import min_degree_null_vector
from .poly import Polynomial, is_coprime, poly_gcd
from .roots import aberth_roots
from .series import PowerSeries

EXACT = math.inf  # sentinel: f*Q - P vanishes up to the scan cap


@dataclass
class NormalizedDenominator:
    """Q = scale * prod(z - inner) * prod(1 - z/outer).

    Roots with modulus below ``2 * R_used`` are inner.  ``boundary`` lists
    roots that sat within the tie tolerance of the split circle; they are
    classified outer.
    """

    inner_roots: list
    outer_roots: list
    R_used: mpfr
    R_source: str
    residual: mpfr
    scale: mpc
    boundary: list = field(default_factory=list)

    @property
    def mu(self) -> int:
        return len(self.inner_roots) + len(self.outer_roots)

    @property
    def roots(self) -> list:
        return list(self.inner_roots) + list(self.outer_roots)

    @property
    def lead(self) -> mpc:
        """Leading coefficient of the normalized product: prod(-1/outer)."""
        out = mpc(1)
        for w in self.outer_roots:
            out *= -1 / w
        return out

    def eval_product(self, z) -> mpc:
        out = mpc(1)
        for w in self.inner_roots:
            out *= z - w
        for w in self.outer_roots:
            out *= 1 - z / w
        return out


@dataclass
class PadeEntry:
    n: int
    m: int
    P: Polynomial
    Q: Polynomial
    defect: int
    normalized: NormalizedDenominator | None = None

    @property
    def mu(self) -> int:
        return self.Q.degree

    @property
    def degP(self) -> int:
        return self.P.degree

    @property
    def a_lead(self) -> Fraction:
        return self.P.lead

    @property
    def contact_floor(self) -> int:
        return self.n + self.m + 1 - self.defect

    def key(self) -> tuple:
        return (self.P.coeffs, self.Q.coeffs)

    def same_fraction(self, other: "PadeEntry") -> bool:
        return self.key() == other.key()

    def __call__(self, z) -> mpc:
        return self.P.eval_hp(z) / self.Q.eval_hp(z)


def _defect(n: int, m: int, P: Polynomial, Q: Polynomial) -> int:
    if P.is_zero():
        return m - Q.degree
    return min(n - P.degree, m - Q.degree)


def pade(f: PowerSeries, n: int, m: int, verify: bool = True) -> PadeEntry:
    """Reduced Padé approximant of type (n, m) with Q(0) = 1."""
    if n < 0 or m < 0:
        raise ParameterError("pade: n and m must be nonnegative")
    fs = f.coeffs(n + m + 1)
    L = math.lcm(*(c.denominator for c in fs))
    F = [c.numerator * (L // c.denominator) for c in fs]
    if m == 0:
        q = [1]
    else:
        rows = [[F[k - j] if k >= j else 0 for j in range(m + 1)] for k in range(n + 1, n + m + 1)]
        q = min_degree_null_vector(rows, m + 1)
    # p = f*q truncated to degree n (scaled by L)
    p = [sum(F[i - j] * q[j] for j in range(min(i, m) + 1)) for i in range(n + 1)]
    # the minimal solution is z^k times the reduced pair
    k = next(i for i, v in enumerate(q) if v)
    if any(p[:k]):
        raise InvariantViolation(f"pade({n},{m}): numerator not divisible by z^{k}")
    q, p = q[k:], p[k:]
    Q = Polynomial(Fraction(v, q[0]) for v in q)
    P = Polynomial(Fraction(v, L * q[0]) for v in p)
    if not is_coprime(P, Q):
        g = poly_gcd(P, Q)
        P, Q = P // g, Q // g
        P, Q = P * (1 / Q[0]), Q * (1 / Q[0])
    entry = PadeEntry(n, m, P, Q, _defect(n, m, P, Q))
    if verify:
        _verify_contact(fs, L, entry)
    return entry


def _verify_contact(fs: Sequence[Fraction], L: int, e: PadeEntry) -> None:
    D = math.lcm(*(c.denominator for c in e.Q.coeffs))
    Qi = [c.numerator * (D // c.denominator) for c in e.Q.coeffs]
    F = [c.numerator * (L // c.denominator) for c in fs]
    LD = L * D
    for j in range(e.contact_floor):
        s = sum(Qi[i] * F[j - i] for i in range(min(j, e.mu) + 1))
        pj = e.P[j]
        if s * pj.denominator != pj.numerator * LD:
            raise InvariantViolation(
                f"pade({e.n},{e.m}): coefficient {j} of f*Q - P is nonzero "
                f"(required contact {e.contact_floor})"
            )


def _scaled_contact(f: PowerSeries, e: PadeEntry, upto: int):
    """Integer coefficients of L*D*(f*Q - P) for j <= upto, lazily, and the scale L*D."""
    fs = f.coeffs(upto + 1)
    L = math.lcm(*(c.denominator for c in fs))
    D = math.lcm(*(c.denominator for c in e.Q.coeffs))
    F = [c.numerator * (L // c.denominator) for c in fs]
    Qi = [c.numerator * (D // c.denominator) for c in e.Q.coeffs]
    LD = L * D

    def stream():
        for j in range(upto + 1):
            s = sum(Qi[i] * F[j - i] for i in range(min(j, e.mu) + 1))
            pj = e.P[j]
            yield s - pj.numerator * (LD // pj.denominator) if pj else s

    return stream(), LD


def contact_coefficients(f: PowerSeries, e: PadeEntry, upto: int) -> list[Fraction]:
    """Coefficients 0..upto of f*Q - P."""
    coeffs, LD = _scaled_contact(f, e, upto)
    return [Fraction(c, LD) for c in coeffs]


def order_of_contact(f: PowerSeries, e: PadeEntry, cap: int | None = None):
    """Index of the first nonzero coefficient of f*Q - P, or EXACT up to ``cap``."""
    if cap is None:
        cap = 2 * (e.n + e.m + 1) + 8
    if cap < e.n + e.m + 1:
        raise ParameterError(f"cap must be >= n+m+1 = {e.n + e.m + 1}")
    coeffs, _ = _scaled_contact(f, e, cap)
    for j, c in enumerate(coeffs):
        if c:
            return j
    return EXACT


def compute_entries(f: PowerSeries, cells: Iterable[tuple[int, int]], threads: int = 1,
                    verify: bool = True) -> list[PadeEntry]:
    cells = list(cells)
    if cells:
        f.coeffs(max(n + m for n, m in cells) + 1)  # fill the cache before fanning out
    if threads <= 1 or len(cells) < 2:
        return [pade(f, n, m, verify) for n, m in cells]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda c: pade(f, c[0], c[1], verify), cells))


# -- blocks ----------------------------------------------------------------------


@dataclass
class Block:
    anchor: tuple[int, int]
    extent: int
    P: Polynomial
    Q: Polynomial
    members: list = field(default_factory=list)
    truncated: bool = False

    def contains(self, n: int, m: int) -> bool:
        n0, m0 = self.anchor
        return n0 <= n < n0 + self.extent and m0 <= m < m0 + self.extent


def block_scan(f: PowerSeries, n_max: int, m_max: int, threads: int = 1,
               entries: Sequence[PadeEntry] | None = None) -> list[Block]:
    """Group the entries with 0 <= n < n_max, 0 <= m < m_max into blocks.

    Each group of identical reduced fractions must be a full square anchored
    at (deg P, deg Q), possibly cut off by the edge of the scanned rectangle.
    Entries with P == 0 form a strip rather than a square and are reported
    as one block without the squareness check.
    """
    if n_max < 1 or m_max < 1:
        raise ParameterError("block_scan: n_max and m_max must be >= 1")
    if entries is None:
        entries = compute_entries(f, [(n, m) for n in range(n_max) for m in range(m_max)], threads)
    groups: dict[tuple, list[PadeEntry]] = {}
    for e in entries:
        groups.setdefault(e.key(), []).append(e)
    blocks = []
    for members in groups.values():
        cells = {(e.n, e.m) for e in members}
        ns = sorted({c[0] for c in cells})
        ms = sorted({c[1] for c in cells})
        n0, m0 = ns[0], ms[0]
        w, h = ns[-1] - n0 + 1, ms[-1] - m0 + 1
        first = members[0]
        if first.P.is_zero():
            blocks.append(Block((n0, m0), max(w, h), first.P, first.Q, sorted(cells), True))
            continue
        if len(cells) != w * h:
            raise InvariantViolation(f"block at ({n0},{m0}) is not a full rectangle: {sorted(cells)}")
        if (n0, m0) != (first.P.degree, first.Q.degree):
            raise InvariantViolation(
                f"block at ({n0},{m0}) not anchored at (deg P, deg Q) = ({first.P.degree},{first.Q.degree})"
            )
        cut_n = n0 + w == n_max
        cut_m = m0 + h == m_max
        if (w < h and not cut_n) or (h < w and not cut_m):
            raise InvariantViolation(f"block at ({n0},{m0}) is {w}x{h}, not square")
        blocks.append(Block((n0, m0), max(w, h), first.P, first.Q, sorted(cells),
                            truncated=(cut_n or cut_m) and w != h))
    blocks.sort(key=lambda b: b.anchor)
    return blocks


# -- normalization and the consecutive-difference identity --------------------


def normalize_denominator(e: PadeEntry, R, R_source: str = "declared",
                          prec: int | None = None) -> NormalizedDenominator:
    """Factor Q into inner roots (|root| < 2R) and outer roots (|root| >= 2R)."""
    prec = prec or max(gmpy2.get_context().precision, DEFAULT_PRECISION)
    with precision(prec):
        R = to_mpfr(R) if not isinstance(R, mpfr) else mpfr(R)
        if not R > 0:
            raise ParameterError("normalize_denominator: R must be positive")
        roots, residual = aberth_roots(e.Q, prec)
        split = 2 * R
        tol = mpfr(2) ** (-(prec // 4)) * max(mpfr(1), split) if gmpy2.is_finite(split) else mpfr(0)
        inner, outer, boundary = [], [], []
        for w in roots:
            a = abs(w)
            if gmpy2.is_finite(split) and abs(a - split) <= tol:
                outer.append(w)
                boundary.append(w)
            elif a < split:
                inner.append(w)
            else:
                outer.append(w)
        scale = mpc(to_mpfr(e.Q.lead)) if e.mu > 0 else mpc(1)
        for w in outer:
            scale *= -w
        nd = NormalizedDenominator(inner, outer, R, R_source, residual, scale, boundary)
        e.normalized = nd
        return nd


def a_coefficient(e: PadeEntry) -> Fraction:
    return e.P.lead


def _nominal(poly: Polynomial, degree: int) -> Fraction:
    return poly[degree] if degree >= 0 else Fraction(0)


def A_coefficient(e_n: PadeEntry, e_next: PadeEntry, norm_n: NormalizedDenominator | None = None,
                  norm_next: NormalizedDenominator | None = None) -> mpc:
    """Coefficient of the monomial numerator of pi_{n+1} - pi_n over N_n N_{n+1}.

    N is the normalized denominator and P/scale the matching numerator.  The
    lead of N_n counts only if deg Q_n = m_n - tau_n, the numerator lead of
    P_n only at degree n - tau_n, and the second product only when the
    schedule steps up.
    """
    norm_n = norm_n or e_n.normalized
    norm_next = norm_next or e_next.normalized
    if norm_n is None or norm_next is None:
        raise ParameterError("A_coefficient: both entries need a normalized denominator")
    if e_next.n != e_n.n + 1 or e_next.m - e_n.m not in (0, 1):
        raise ScheduleError(
            f"A_coefficient: ({e_next.n},{e_next.m}) does not follow ({e_n.n},{e_n.m}) on a ray"
        )
    if norm_n.R_used != norm_next.R_used:
        raise ParameterError("A_coefficient: normalizations used different radii")
    n, m, tau = e_n.n, e_n.m, e_n.defect
    first = mpc(0)
    top_next = _nominal(e_next.P, n + 1)
    if top_next and e_n.mu == m - tau:
        first = to_mpfr(top_next) / norm_next.scale * norm_n.lead
    second = mpc(0)
    if e_next.m == m + 1:
        top_n = _nominal(e_n.P, n - tau)
        if top_n and e_next.mu == m + 1:
            second = to_mpfr(top_n) / norm_n.scale * norm_next.lead
    return first - second


def difference_exponent(e_n: PadeEntry) -> int:
    return e_n.n + e_n.m + 1 - e_n.defect


def _check_poles(z, norms, min_distance) -> None:
    for nd in norms:
        for w in nd.roots:
            if abs(z - w) <= min_distance:
                raise PoleProximityError(
                    f"z={complex(z)} lies within {float(min_distance)} of a computed root {complex(w)}"
                )


def difference_identity_residual(e_n: PadeEntry, e_next: PadeEntry, A, z,
                                 min_distance=mpfr("1e-6")) -> mpc:
    """(pi_{n+1} - pi_n)(z) - A z^k / (N_n N_{n+1})(z), k = n + m_n + 1 - tau_n."""
    if e_n.normalized is None or e_next.normalized is None:
        raise ParameterError("difference_identity_residual: entries must be normalized")
    z = to_mpc(z)
    _check_poles(z, (e_n.normalized, e_next.normalized), min_distance)
    qn, qn1 = e_n.Q.eval_hp(z), e_next.Q.eval_hp(z)
    lhs = e_next.P.eval_hp(z) / qn1 - e_n.P.eval_hp(z) / qn
    Nn, Nn1 = qn / e_n.normalized.scale, qn1 / e_next.normalized.scale
    return lhs - A * z ** difference_exponent(e_n) / (Nn * Nn1)


@dataclass
class TailReport:
    n: int
    n_terms: int
    z: mpc
    error: mpc  # f(z) - pi_n(z)
    partial_sum: mpc
    gap: mpfr
    tail_bound: mpfr
    R_rate: mpfr
    R_source: str
    direct_terms: list  # k where tau_{k+1} != 0 and the exact difference was used

    @property
    def within_bound(self) -> bool:
        return self.gap <= self.tail_bound


def tail_series_check(f: PowerSeries, schedule, n: int, n_terms: int, z, eps,
                      R_f=None, R_rate=None, prec: int | None = None,
                      threads: int = 1) -> TailReport:
    """Compare f(z) - pi_n(z) against the telescoped differences from n to n + n_terms.

    ``R_f`` (the meromorphy radius) fixes the normalization split and the
    domain check |z| < 0.9 R_f; ``R_rate`` sets the geometric tail estimate.
    Both default to declared metadata, falling back to Hankel estimates.
    """
    from .series import resolve_radius
    from .convergence import omega_disks

    if not f.has_reference:
        raise CapabilityError(f"{f.name}: tail check needs a reference evaluator")
    prec = prec or DEFAULT_PRECISION
    last = n + n_terms + 1
    if schedule.horizon < last:
        raise ParameterError(f"schedule horizon {schedule.horizon} < {last}")
    with precision(prec):
        z = to_mpc(z)
        if R_f is None:
            R_f, src_f = resolve_radius(f, prec=prec)
        else:
            R_f, src_f = to_mpfr(R_f), "caller"
        if not abs(z) < mpfr("0.9") * R_f:
            raise DomainError(f"|z| = {float(abs(z))} is not below 0.9 R(f)")
        if R_rate is None:
            ms = schedule.values[n:last + 1]
            if ms[0] == ms[-1]:
                R_rate, src = resolve_radius(f, m=ms[-1], prec=prec)
            else:
                R_rate, src = R_f, src_f
        else:
            R_rate, src = to_mpfr(R_rate), "caller"
        entries = compute_entries(f, [(k, schedule.values[k]) for k in range(0, last + 1)], threads)
        for e in entries:
            normalize_denominator(e, R_f, src_f, prec)
        excl = omega_disks(entries, eps)
        if excl.contains(z):
            raise PoleProximityError(f"z={complex(z)} lies in the exclusion set")
        by_n = {e.n: e for e in entries}
        total = mpc(0)
        direct = []
        for k in range(n, n + n_terms + 1):
            e_k, e_k1 = by_n[k], by_n[k + 1]
            if e_k1.defect == 0:
                A = A_coefficient(e_k, e_k1)
                Nk = e_k.Q.eval_hp(z) / e_k.normalized.scale
                Nk1 = e_k1.Q.eval_hp(z) / e_k1.normalized.scale
                total += A * z ** difference_exponent(e_k) / (Nk * Nk1)
            else:
                direct.append(k)
                total += e_k1(z) - e_k(z)
        err = f.reference_eval(z) - by_n[n](z)
        gap = abs(err - total)
        bound = (abs(z) / R_rate) ** (n + n_terms) if gmpy2.is_finite(R_rate) else mpfr(0)
        return TailReport(n, n_terms, z, err, total, gap, bound, R_rate, src, direct)
