"""Formal power series with exact coefficients, the test-function catalog,
radius estimation and high-precision reference evaluation."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Sequence

import gmpy2
from gmpy2 import mpc, mpfr

from .errors import CapabilityError, DomainError, ParameterError
from .hp import DEFAULT_PRECISION, INF, abs_root, precision, to_mpc, to_mpfr
from .linalg import det_rational
from .poly import Polynomial

CoefficientStream = Callable[[], Iterator[Fraction]]


@dataclass
class SeriesMeta:
    """Declared analytic facts about a catalog function.

    ``None`` means "unknown".  Radii are Fractions when exact, ``math.inf``
    for infinity, or mpfr values when only known numerically.  Estimators
    never read this; only validators and experiment drivers do.
    """

    R0: object = None
    R_f: object = None
    rm_rule: Callable[[int], object] | None = None
    poles: list = field(default_factory=list)  # (pole, multiplicity)
    branch_points: list = field(default_factory=list)
    regular_points: list = field(default_factory=list)
    regular: Callable[[mpc], bool] | None = None
    exact_type: tuple[int, int] | None = None
    polynomial_degree: int | None = None
    gap_windows: list = field(default_factory=list)
    multivalued: bool = False

    def Rm(self, m: int):
        if self.rm_rule is None:
            return None
        return self.rm_rule(m)

    def is_regular(self, z) -> bool:
        if self.regular is None:
            return False
        return bool(self.regular(to_mpc(z)))


class PowerSeries:
    """Exact coefficient stream with a memo.

    ``source`` is a zero-argument factory returning a fresh iterator over
    f_0, f_1, ...; it is consumed once and cached.  Reads of already cached
    coefficients take no lock; extending the cache is serialized.
    """

    def __init__(
        self,
        source: CoefficientStream,
        *,
        name: str = "series",
        kind: str = "custom",
        params: dict | None = None,
        reference: Callable[[mpc], mpc] | None = None,
        region: Callable[[mpc], bool] | None = None,
        meta: SeriesMeta | None = None,
    ):
        self.name = name
        self.kind = kind
        self.params = dict(params or {})
        self._source = source
        self._iter: Iterator[Fraction] | None = None
        self._memo: list[Fraction] = []
        self._lock = threading.Lock()
        self._reference = reference
        self._region = region
        self.meta = meta or SeriesMeta()

    @classmethod
    def from_rule(cls, rule: Callable[[int], object], **kw) -> "PowerSeries":
        def source():
            j = 0
            while True:
                yield Fraction(rule(j))
                j += 1

        return cls(source, **kw)

    @classmethod
    def from_coefficients(cls, coeffs: Sequence, **kw) -> "PowerSeries":
        """Finite coefficient list followed by zeros (a polynomial)."""
        fixed = [Fraction(c) for c in coeffs]
        return cls.from_rule(lambda j: fixed[j] if j < len(fixed) else 0, **kw)

    def coeff(self, j: int) -> Fraction:
        if j < 0:
            raise IndexError("coefficient index must be nonnegative")
        memo = self._memo
        if j < len(memo):
            return memo[j]
        with self._lock:
            if self._iter is None:
                self._iter = iter(self._source())
            while len(memo) <= j:
                memo.append(Fraction(next(self._iter)))
        return memo[j]

    def coeffs(self, n: int) -> list[Fraction]:
        """f_0 .. f_{n-1}."""
        if n <= 0:
            return []
        self.coeff(n - 1)
        return self._memo[:n]

    def truncation(self, n: int) -> Polynomial:
        """Taylor polynomial of degree <= n."""
        return Polynomial(self.coeffs(n + 1))

    @property
    def has_reference(self) -> bool:
        return self._reference is not None

    def in_region(self, z) -> bool:
        if self._reference is None:
            return False
        return self._region is None or bool(self._region(to_mpc(z)))

    def reference_eval(self, z, prec: int | None = None) -> mpc:
        if self._reference is None:
            raise CapabilityError(f"{self.name}: no reference evaluator")
        if prec is not None:
            with precision(prec):
                return self.reference_eval(z)
        z = to_mpc(z)
        if self._region is not None and not self._region(z):
            raise DomainError(f"{self.name}: z={complex(z)} outside the reference region")
        return self._reference(z)

    def __repr__(self) -> str:
        return f"PowerSeries({self.name!r})"


def coeff(f: PowerSeries, j: int) -> Fraction:
    return f.coeff(j)


# -- catalog -----------------------------------------------------------------


def _frac(x, name: str) -> Fraction:
    try:
        return Fraction(x.strip()) if isinstance(x, str) else Fraction(x)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ParameterError(f"{name}: not a rational number: {x!r}") from exc


def _frac_list(xs, name: str) -> list[Fraction]:
    if not isinstance(xs, (list, tuple)):
        raise ParameterError(f"{name}: expected a list")
    return [_frac(x, f"{name}[{i}]") for i, x in enumerate(xs)]


def _not_near(points, tol_bits_below: int = 8):
    pts = [to_mpc(p) for p in points]

    def check(z):
        tol = mpfr(2) ** (-(gmpy2.get_context().precision - tol_bits_below))
        return all(abs(z - p) > tol * max(1, abs(p)) for p in pts)

    return check


def rational(poles, residues, multiplicities=None, polynomial=None) -> PowerSeries:
    """Sum of r / (b - z)^k over (pole b, weight r, order k) plus a polynomial part."""
    bs = _frac_list(poles, "poles")
    rs = _frac_list(residues, "residues")
    ks = [1] * len(bs) if multiplicities is None else list(multiplicities)
    if not bs:
        raise ParameterError("poles: at least one pole required")
    if len(rs) != len(bs) or len(ks) != len(bs):
        raise ParameterError("poles, residues and multiplicities must have equal length")
    for i, (b, r, k) in enumerate(zip(bs, rs, ks)):
        if b == 0:
            raise ParameterError(f"poles[{i}]: pole at 0 is not allowed")
        if r == 0:
            raise ParameterError(f"residues[{i}]: zero weight")
        if not isinstance(k, int) or k < 1:
            raise ParameterError(f"multiplicities[{i}]: must be a positive integer")
    if len(set(bs)) != len(bs):
        raise ParameterError("poles: duplicate pole; use multiplicities instead")
    poly = Polynomial(_frac_list(polynomial or [], "polynomial"))

    def source():
        j = 0
        while True:
            s = poly[j]
            for b, r, k in zip(bs, rs, ks):
                s += r * math.comb(j + k - 1, k - 1) / b ** (j + k)
            yield s
            j += 1

    def reference(z):
        s = poly.eval_hp(z)
        for b, r, k in zip(bs, rs, ks):
            d = to_mpfr(b) - z
            t = to_mpfr(r) / d
            for _ in range(k - 1):
                t /= d
            s += t
        return s

    moduli = sorted(abs(b) for b, k in zip(bs, ks) for _ in range(k))
    q = len(moduli)
    p = poly.degree + q if not poly.is_zero() else q - 1
    regular = _not_near(bs)
    meta = SeriesMeta(
        R0=moduli[0],
        R_f=math.inf,
        rm_rule=lambda m: moduli[m] if m < q else math.inf,
        poles=[(b, k) for b, k in zip(bs, ks)],
        regular=regular,
        regular_points=[-b for b in bs if -b not in bs],
        exact_type=(p, q),
        polynomial_degree=poly.degree,
    )
    params = {"poles": [str(b) for b in bs], "residues": [str(r) for r in rs], "multiplicities": ks,
              "polynomial": poly.to_strings()}
    return PowerSeries(source, name="rational", kind="rational", params=params,
                       reference=reference, region=regular, meta=meta)


def geometric() -> PowerSeries:
    """1 / (1 - z)."""
    return rational([1], [1])


def log_branch(b=1) -> PowerSeries:
    """log(1 / (1 - z/b)), principal branch, cut along the ray from b outward."""
    b = _frac(b, "b")
    if b == 0:
        raise ParameterError("b: branch point at 0 is not allowed")

    def source():
        yield Fraction(0)
        j = 1
        while True:
            yield Fraction(1, j) / b**j
            j += 1

    def reference(z):
        return -gmpy2.log(1 - z / to_mpfr(b))

    def region(z):
        w = z / to_mpfr(b)
        return not (w.imag == 0 and w.real >= 1)

    return PowerSeries(
        source, name="log-branch", kind="log-branch", params={"b": str(b)},
        reference=reference, region=region,
        meta=_branch_meta(b),
    )


def _branch_meta(b: Fraction) -> SeriesMeta:
    R = abs(b)
    return SeriesMeta(
        R0=R, R_f=R, rm_rule=lambda m: R,
        branch_points=[b], regular=_not_near([b]), regular_points=[-b],
        multivalued=True,
    )


def algebraic_branch(b=1, alpha=Fraction(1, 2)) -> PowerSeries:
    """(1 - z/b)^alpha for non-integer rational alpha."""
    b = _frac(b, "b")
    alpha = _frac(alpha, "alpha")
    if b == 0:
        raise ParameterError("b: branch point at 0 is not allowed")
    if alpha.denominator == 1:
        raise ParameterError("alpha: must be non-integer")

    def source():
        c = Fraction(1)
        yield c
        j = 1
        while True:
            c = c * (alpha - j + 1) / j * (-1 / b)
            yield c
            j += 1

    def reference(z):
        return gmpy2.exp(to_mpfr(alpha) * gmpy2.log(1 - z / to_mpfr(b)))

    def region(z):
        w = z / to_mpfr(b)
        return not (w.imag == 0 and w.real >= 1)

    return PowerSeries(
        source, name="algebraic-branch", kind="algebraic-branch",
        params={"b": str(b), "alpha": str(alpha)},
        reference=reference, region=region, meta=_branch_meta(b),
    )


def _max_on_circle(P: Polynomial, r, samples: int = 720):
    best, best_t = mpfr(-1), 0
    two_pi = 2 * gmpy2.const_pi()
    for k in range(samples):
        t = two_pi * k / samples
        v = abs(P.eval_hp(r * gmpy2.exp(mpc(0, t))))
        if v > best:
            best, best_t = v, t
    # golden-section refinement around the best sample
    h = two_pi / samples
    lo, hi = best_t - h, best_t + h
    g = (gmpy2.sqrt(mpfr(5)) - 1) / 2
    for _ in range(80):
        a = hi - g * (hi - lo)
        c = lo + g * (hi - lo)
        if abs(P.eval_hp(r * gmpy2.exp(mpc(0, a)))) > abs(P.eval_hp(r * gmpy2.exp(mpc(0, c)))):
            hi = c
        else:
            lo = a
    t = (lo + hi) / 2
    return max(best, abs(P.eval_hp(r * gmpy2.exp(mpc(0, t))))), t


def lemniscate_radius(cP: Polynomial, prec: int = 128):
    """Smallest r with max_{|z|=r} |cP(z)| = 1, by bisection (the max is increasing in r)."""
    with precision(prec):
        lo, hi = mpfr(0), mpfr(1)
        while _max_on_circle(cP, hi)[0] < 1:
            hi *= 2
        for _ in range(prec):
            mid = (lo + hi) / 2
            if _max_on_circle(cP, mid, samples=180)[0] < 1:
                lo = mid
            else:
                hi = mid
        return (lo + hi) / 2


def lacunary_lemniscate(P, g: int = 2, c=1) -> PowerSeries:
    """sum_j (c P(z))^(g^j) with P(0) = 0.

    Term j occupies degrees [p g^j, q g^j] where p = ord P and q = deg P;
    the gap condition q < p g keeps the terms disjoint and separated.
    """
    Pp = Polynomial(_frac_list(P, "P"))
    c = _frac(c, "c")
    if not isinstance(g, int) or isinstance(g, bool) or g < 2:
        raise ParameterError("g: gap base must be an integer >= 2")
    if Pp.degree < 1:
        raise ParameterError("P: must be non-constant")
    if Pp[0] != 0:
        raise ParameterError("P: P(0) must be 0")
    if c == 0:
        raise ParameterError("c: must be nonzero")
    p, q = Pp.order, Pp.degree
    if not q < p * g:
        raise ParameterError(f"P, g: gap condition violated (deg P = {q} must be < ord P * g = {p * g})")
    cP = Pp * c

    def source():
        j, term = 0, cP
        d = 0
        while True:
            lo, hi = p * g**j, q * g**j
            if d > hi:
                if d < p * g ** (j + 1):
                    yield Fraction(0)
                    d += 1
                    continue
                j, term = j + 1, term**g
                continue
            yield term[d] if d >= lo else Fraction(0)
            d += 1

    def region(z):
        return abs(cP.eval_hp(z)) < 1

    def reference(z):
        w = cP.eval_hp(z)
        aw = abs(w)
        if aw >= 1:
            raise DomainError("|cP(z)| >= 1: grouped series diverges")
        target = mpfr(2) ** (-(gmpy2.get_context().precision - 8))
        s, wp, e = mpc(0), w, 1
        while True:
            s += wp
            nxt = e * g
            tail = aw**nxt / (1 - aw)
            if tail <= target * max(abs(s), mpfr(2) ** -64) or wp == 0:
                return s
            wp = wp**g
            e = nxt

    R = lemniscate_radius(cP)
    regular = lambda z: abs(cP.eval_hp(z)) < 1  # noqa: E731
    with precision(128):
        candidates = [mpc(R, 0), mpc(0, R), mpc(-R, 0), mpc(0, -R)]
        reg_points = [z for z in candidates if abs(cP.eval_hp(z)) < 1]
    windows = [(q * g**j, p * g ** (j + 1)) for j in range(40)]
    meta = SeriesMeta(
        R0=R, R_f=R, rm_rule=lambda m: R,
        regular=regular, regular_points=reg_points, gap_windows=windows,
    )
    return PowerSeries(
        source, name="lacunary-lemniscate", kind="lacunary-lemniscate",
        params={"P": Pp.to_strings(), "g": g, "c": str(c)},
        reference=reference, region=region, meta=meta,
    )


def _dyadic_masked(n: int, phase: int) -> bool:
    if n < 2:
        return False
    k = (n - 1).bit_length() - 1  # n in (2^k, 2^(k+1)]
    return k % 2 == phase


def taylor_gap(radius=1, intervals=None, rule=None, phase: int = 0) -> PowerSeries:
    """f_n = radius^-n except on masked indices, where f_n = 0.

    ``intervals`` lists half-open index windows (lo, hi]; ``rule =
    "dyadic-alternating"`` masks (2^k, 2^(k+1)] for k of parity ``phase``.
    """
    rho = _frac(radius, "radius")
    if rho <= 0:
        raise ParameterError("radius: must be positive")
    if (intervals is None) == (rule is None):
        raise ParameterError("taylor-gap: give exactly one of 'intervals' or 'rule'")
    if rule is not None:
        if rule != "dyadic-alternating":
            raise ParameterError(f"rule: unknown mask rule {rule!r}")
        if phase not in (0, 1):
            raise ParameterError("phase: must be 0 or 1")
        masked = lambda n: _dyadic_masked(n, phase)  # noqa: E731
        mask_desc = {"rule": rule, "phase": phase}
    else:
        ivs = []
        for i, iv in enumerate(intervals):
            if not isinstance(iv, (list, tuple)) or len(iv) != 2:
                raise ParameterError(f"intervals[{i}]: expected [lo, hi]")
            lo, hi = int(iv[0]), int(iv[1])
            if not 0 <= lo < hi:
                raise ParameterError(f"intervals[{i}]: need 0 <= lo < hi")
            ivs.append((lo, hi))
        masked = lambda n: any(lo < n <= hi for lo, hi in ivs)  # noqa: E731
        mask_desc = {"intervals": [list(iv) for iv in ivs]}

    def source():
        n = 0
        while True:
            yield Fraction(0) if masked(n) else rho**-n
            n += 1

    if rule is not None:
        def reference(z):
            w = z / to_mpfr(rho)
            aw = abs(w)
            target = mpfr(2) ** (-(gmpy2.get_context().precision - 8))
            s, wp, n = mpc(0), mpc(1), 0
            while True:
                if not masked(n):
                    s += wp
                tail = aw ** (n + 1) / (1 - aw)
                if tail <= target * max(abs(s), mpfr(2) ** -64):
                    return s
                wp *= w
                n += 1

        region = lambda z: abs(z) < to_mpfr(rho)  # noqa: E731
        meta = SeriesMeta(R0=rho, R_f=rho, rm_rule=lambda m: rho, regular=lambda z: False)
    else:
        top = max(hi for _, hi in ivs)
        missing = [n for n in range(top + 1) if masked(n)]

        def reference(z):
            w = z / to_mpfr(rho)
            s = 1 / (1 - w)
            for n in missing:
                s -= w**n
            return s

        region = _not_near([rho])
        meta = SeriesMeta(
            R0=rho, R_f=math.inf, rm_rule=lambda m: rho if m == 0 else math.inf,
            poles=[(rho, 1)], regular=region, regular_points=[-rho],
            exact_type=(top, 1), polynomial_degree=top - 1 if missing else None,
        )
    return PowerSeries(
        source, name="taylor-gap", kind="taylor-gap",
        params={"radius": str(rho), **mask_desc},
        reference=reference, region=region, meta=meta,
    )


def exponential(c=1) -> PowerSeries:
    """exp(c z); entire, so every radius is infinite."""
    c = _frac(c, "c")

    def source():
        t = Fraction(1)
        yield t
        j = 1
        while True:
            t = t * c / j
            yield t
            j += 1

    meta = SeriesMeta(R0=math.inf, R_f=math.inf, rm_rule=lambda m: math.inf,
                      regular=lambda z: True)
    return PowerSeries(source, name="exponential", kind="exponential", params={"c": str(c)},
                       reference=lambda z: gmpy2.exp(to_mpfr(c) * z), meta=meta)


CATALOG = {
    "rational": rational,
    "log-branch": log_branch,
    "algebraic-branch": algebraic_branch,
    "lacunary-lemniscate": lacunary_lemniscate,
    "taylor-gap": taylor_gap,
    "exponential": exponential,
}


def catalog_make(kind: str, **params) -> PowerSeries:
    try:
        ctor = CATALOG[kind]
    except KeyError:
        raise ParameterError(f"kind: unknown catalog function {kind!r}; "
                             f"expected one of {sorted(CATALOG)}") from None
    try:
        return ctor(**params)
    except TypeError as exc:
        raise ParameterError(f"{kind}: {exc}") from exc


# -- radius estimation --------------------------------------------------------


@dataclass
class RadiusEstimate:
    value: mpfr
    window: tuple[int, int]
    method: str
    diagnostics: list = field(default_factory=list)
    degenerate: bool = False

    @property
    def infinite(self) -> bool:
        return not gmpy2.is_finite(self.value)


def _window(N: int) -> range:
    return range((N + 1) // 2, N + 1)


def estimate_r0(f: PowerSeries, N: int, prec: int | None = None) -> RadiusEstimate:
    """1 / max_{N/2 <= n <= N} |f_n|^(1/n)."""
    if N < 16:
        raise ParameterError("N must be at least 16")
    with precision(prec or DEFAULT_PRECISION):
        win = _window(N)
        samples = [(n, abs_root(f.coeff(n), n)) for n in win]
        peak = max(v for _, v in samples)
        value = INF if peak == 0 else 1 / peak
        return RadiusEstimate(value, (win.start, win.stop - 1), "cauchy-hadamard", samples)


def hankel_det(f: PowerSeries, k: int, n: int) -> Fraction:
    """det(f_{n+i+j})_{0 <= i,j < k}; H_0 = 1."""
    if k == 0:
        return Fraction(1)
    return det_rational([[f.coeff(n + i + j) for j in range(k)] for i in range(k)])


def estimate_rm(f: PowerSeries, m: int, N: int, prec: int | None = None) -> RadiusEstimate:
    """Hankel-ratio estimate L_m / L_{m+1} of the radius of m-meromorphy.

    L_k is the windowed maximum of |H_k(n)|^(1/n) over N/2 <= n <= N.
    """
    if m < 0:
        raise ParameterError("m must be nonnegative")
    if N < 2:
        raise ParameterError("N too small")
    with precision(prec or DEFAULT_PRECISION):
        win = _window(N)

        def level(k):
            if k == 0:
                return mpfr(1), []
            vals = [(n, abs_root(hankel_det(f, k, n), n)) for n in win]
            return max(v for _, v in vals), vals

        lm, dm = level(m)
        lm1, dm1 = level(m + 1)
        if lm1 == 0:
            return RadiusEstimate(INF, (win.start, win.stop - 1), "hankel-ratio",
                                  {"L_m": dm, "L_m+1": dm1}, degenerate=True)
        return RadiusEstimate(lm / lm1, (win.start, win.stop - 1), "hankel-ratio",
                              {"L_m": dm, "L_m+1": dm1})


def resolve_radius(f: PowerSeries, m: int | None = None, N: int = 64, m_sup: int = 4,
                   prec: int = 256):
    """Radius for normalizations and theory rates, with provenance.

    ``m`` given: R_m; otherwise R(f).  Declared meta wins; when unknown,
    R_m comes from the Hankel ratio and R(f) from the sup of R_m over
    m <= m_sup (finite surrogate of sup_m R_m).
    """
    with precision(prec):
        if m is not None:
            declared = f.meta.Rm(m)
            if declared is not None:
                return to_mpfr(declared), "declared"
            return estimate_rm(f, m, N).value, f"estimated: hankel-ratio m={m} N={N}"
        if f.meta.R_f is not None:
            return to_mpfr(f.meta.R_f), "declared"
        best = max(estimate_rm(f, k, N).value for k in range(m_sup + 1))
        return best, f"estimated: sup of hankel-ratio R_m over m<={m_sup}, N={N}"
