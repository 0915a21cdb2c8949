"""Exclusion sets around free poles, error grids on compact sets, fitted
convergence rates and overconvergence scans near regular boundary points."""

from __future__ import annotations

import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import gmpy2
from gmpy2 import mpc, mpfr

from .errors import CapabilityError, DomainError, GridError, ParameterError
from .hp import DEFAULT_PRECISION, INF, precision, to_mpc, to_mpfr
from .pade import PadeEntry
from .series import PowerSeries, resolve_radius
from .sequences import Window


def _as_fraction(x) -> Fraction:
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


# -- exclusion sets -----------------------------------------------------------


@dataclass
class ExclusionSet:
    """Union over computed n >= 1 of disks of radius eps/(6 mu_n n^2) about the free poles.

    Only indices up to ``horizon`` contribute; the union over all n is
    truncated there.
    """

    disks: list  # (n, center, radius as Fraction)
    eps: Fraction
    sigma_bound: Fraction
    horizon: int

    def contains(self, z) -> bool:
        z = to_mpc(z)
        return any(abs(z - c) < to_mpfr(r) for _, c, r in self.disks)

    def diameter_sum(self) -> Fraction:
        return sum((2 * r for _, _, r in self.disks), Fraction(0))


def omega_disks(entries: Sequence[PadeEntry], eps, norms: Sequence | None = None) -> ExclusionSet:
    eps = _as_fraction(eps)
    if eps <= 0:
        raise ParameterError("eps must be positive")
    disks = []
    sigma = Fraction(0)
    horizon = 0
    for i, e in enumerate(entries):
        horizon = max(horizon, e.n)
        if e.n < 1 or e.mu == 0:
            continue
        nd = norms[i] if norms is not None else e.normalized
        if nd is None:
            raise ParameterError(f"entry ({e.n},{e.m}) has no normalized denominator")
        r = eps / (6 * e.mu * e.n * e.n)
        for w in nd.roots:
            disks.append((e.n, w, r))
        sigma += e.mu * 2 * r
    return ExclusionSet(disks, eps, sigma, horizon)


# -- grids --------------------------------------------------------------------


@dataclass
class CompactGrid:
    shape: str
    geometry: dict
    points: list
    excluded: set = field(default_factory=set)
    spacing: mpfr | None = None

    @property
    def retained(self) -> list[int]:
        return [i for i in range(len(self.points)) if i not in self.excluded]

    def max_modulus(self) -> mpfr:
        return max(abs(self.points[i]) for i in self.retained)

    def exclude(self, excl: ExclusionSet | None = None, predicate=None) -> "CompactGrid":
        """New grid with points inside the exclusion set (or matching ``predicate``) removed."""
        out = set(self.excluded)
        for i, z in enumerate(self.points):
            if (excl is not None and excl.contains(z)) or (predicate is not None and predicate(z)):
                out.add(i)
        return CompactGrid(self.shape, self.geometry, self.points, out, self.spacing)


def _jitter(rng: random.Random | None, amount: float) -> float:
    return rng.uniform(-amount, amount) if rng is not None and amount else 0.0


def disk_grid(center, radius, n_r: int = 64, n_theta: int = 64, jitter: float = 0.0,
              seed: int | None = None) -> CompactGrid:
    """Center plus n_r circles of radius radius*i/n_r, n_theta equal angles each.

    Doubling both densities keeps every previous point.  ``jitter`` perturbs
    radius and angle by up to that fraction of a step (seeded).
    """
    if n_r < 1 or n_theta < 1:
        raise GridError("grid densities must be positive")
    center, radius = to_mpc(center), to_mpfr(radius)
    rng = random.Random(seed) if jitter else None
    two_pi = 2 * gmpy2.const_pi()
    pts = [center]
    for i in range(1, n_r + 1):
        for j in range(n_theta):
            ri = radius * min(1, (i + _jitter(rng, jitter)) / n_r)
            t = two_pi * (j + _jitter(rng, jitter)) / n_theta
            pts.append(center + ri * gmpy2.exp(mpc(0, t)))
    spacing = max(radius / n_r, radius * two_pi / n_theta)
    return CompactGrid("disk", {"center": center, "radius": radius, "n_r": n_r, "n_theta": n_theta},
                       pts, set(), spacing)


def annulus_grid(center, r_in, r_out, n_r: int = 64, n_theta: int = 64,
                 theta0=0, theta1=None) -> CompactGrid:
    """Annulus r_in <= |z - center| <= r_out; with theta1 set, the sector theta0..theta1."""
    center, r_in, r_out = to_mpc(center), to_mpfr(r_in), to_mpfr(r_out)
    if not 0 <= r_in < r_out:
        raise GridError("annulus needs 0 <= r_in < r_out")
    if n_r < 2 or n_theta < 1:
        raise GridError("grid densities too small")
    two_pi = 2 * gmpy2.const_pi()
    sector = theta1 is not None
    t0 = to_mpfr(theta0)
    span = to_mpfr(theta1) - t0 if sector else two_pi
    steps = n_theta - 1 if sector and n_theta > 1 else n_theta
    pts = []
    for i in range(n_r):
        ri = r_in + (r_out - r_in) * i / (n_r - 1)
        for j in range(n_theta):
            pts.append(center + ri * gmpy2.exp(mpc(0, t0 + span * j / steps)))
    geometry = {"center": center, "r_in": r_in, "r_out": r_out, "n_r": n_r, "n_theta": n_theta}
    if sector:
        geometry.update(theta0=t0, theta1=to_mpfr(theta1))
    spacing = max((r_out - r_in) / (n_r - 1), r_out * abs(span) / steps)
    return CompactGrid("annular-sector" if sector else "annulus", geometry, pts, set(), spacing)


def rectangle_grid(x0, x1, y0, y1, nx: int = 64, ny: int = 64) -> CompactGrid:
    x0, x1, y0, y1 = map(to_mpfr, (x0, x1, y0, y1))
    if not (x0 < x1 and y0 < y1) or nx < 2 or ny < 2:
        raise GridError("degenerate rectangle")
    pts = [mpc(x0 + (x1 - x0) * i / (nx - 1), y0 + (y1 - y0) * j / (ny - 1))
           for i in range(nx) for j in range(ny)]
    spacing = max((x1 - x0) / (nx - 1), (y1 - y0) / (ny - 1))
    return CompactGrid("rectangle", {"x0": x0, "x1": x1, "y0": y0, "y1": y1, "nx": nx, "ny": ny},
                       pts, set(), spacing)


def make_grid(shape: str, **geometry) -> CompactGrid:
    builders = {"disk": disk_grid, "annulus": annulus_grid, "annular-sector": annulus_grid,
                "rectangle": rectangle_grid}
    try:
        build = builders[shape]
    except KeyError:
        raise GridError(f"unknown grid shape {shape!r}") from None
    if shape == "annular-sector" and "theta1" not in geometry:
        raise GridError("annular-sector needs theta0 and theta1")
    try:
        return build(**geometry)
    except TypeError as exc:
        raise GridError(f"{shape}: {exc}") from exc


# -- error evaluation ---------------------------------------------------------


def _chunks(seq, k):
    k = max(1, k)
    size = (len(seq) + k - 1) // k
    return [seq[i:i + size] for i in range(0, len(seq), size)]


def point_errors(f: PowerSeries, entries: Sequence[PadeEntry], points: Sequence, prec: int,
                 threads: int = 1):
    """Per-point reference values and |f - pi_n| for each entry.

    Returns ``(kept_indices, errors, skipped)`` where errors[k][i] belongs to
    entry k and kept point i; points outside the reference region are skipped.
    """

    def work(idx_chunk):
        with precision(prec):
            out = []
            for i in idx_chunk:
                z = points[i]
                try:
                    fz = f.reference_eval(z)
                except DomainError:
                    out.append((i, None))
                    continue
                out.append((i, [abs(fz - e(z)) for e in entries]))
            return out

    idx = list(range(len(points)))
    if threads > 1 and len(idx) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, _chunks(idx, threads)))
    else:
        parts = [work(idx)]
    kept, rows, skipped = [], [], 0
    for part in parts:
        for i, errs in part:
            if errs is None:
                skipped += 1
            else:
                kept.append(i)
                rows.append(errs)
    errors = [[row[k] for row in rows] for k in range(len(entries))]
    return kept, errors, skipped


def fit_rate(ns: Sequence[int], errors: Sequence) -> mpfr | None:
    """exp(slope) of least squares log(error) ~ n over the trailing half; None if unfit."""
    pairs = [(n, e) for n, e in zip(ns, errors) if n >= 1]
    pairs = pairs[len(pairs) // 2:]
    pairs = [(n, e) for n, e in pairs if e > 0]
    if len(pairs) < 2:
        return None
    xs = [mpfr(n) for n, _ in pairs]
    ys = [gmpy2.log(e) for _, e in pairs]
    mx = sum(xs) / len(xs)
    my = sum(ys) / len(ys)
    sxx = sum((x - mx) ** 2 for x in xs)
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    return gmpy2.exp(sxy / sxx)


@dataclass
class ConvergenceReport:
    shape: str
    ns: list[int]
    sup_errors: list
    retained: int
    skipped: int
    fitted_rate: mpfr | None
    theory_rate: mpfr
    R: mpfr
    R_source: str
    max_modulus: mpfr
    tolerance: float
    verdict: str
    residual: mpfr | None


def grid_errors(f: PowerSeries, entries: Sequence[PadeEntry], K: CompactGrid,
                excl: ExclusionSet | None = None, R=None, R_source: str | None = None,
                tolerance: float = 0.05, prec: int | None = None, threads: int = 1,
                min_points: int = 50) -> ConvergenceReport:
    """Sup of |f - pi_n| over the retained grid points, with fitted and theoretical rates.

    ``R`` defaults to R_m for a constant schedule and to R(f) otherwise.
    """
    if not f.has_reference:
        raise CapabilityError(f"{f.name}: no reference evaluator for error grids")
    prec = prec or DEFAULT_PRECISION
    entries = sorted(entries, key=lambda e: e.n)
    grid = K.exclude(excl) if excl is not None else K
    idx = grid.retained
    if len(idx) < min_points:
        raise GridError(f"only {len(idx)} retained grid points (need {min_points})")
    with precision(prec):
        if R is None:
            ms = {e.m for e in entries if e.n >= 1}
            m = ms.pop() if len(ms) == 1 else None
            R, R_source = resolve_radius(f, m=m, prec=prec)
        else:
            R, R_source = to_mpfr(R), R_source or "caller"
        pts = [grid.points[i] for i in idx]
        kept, errors, skipped = point_errors(f, entries, pts, prec, threads)
        if not kept:
            raise GridError("every grid point fell outside the reference region")
        sups = [max(errs) for errs in errors]
        ns = [e.n for e in entries]
        maxmod = max(abs(pts[i]) for i in kept)
        theory = maxmod / R
        tail = [s for n, s in zip(ns, sups) if n >= 1]
        if tail and all(s == 0 for s in tail):
            fitted, verdict, resid = mpfr(0), "exact", mpfr(0)
        else:
            fitted = fit_rate(ns, sups)
            if fitted is None:
                verdict, resid = "unfit", None
            else:
                resid = abs(fitted - theory)
                verdict = "agree" if resid <= tolerance else "disagree"
        return ConvergenceReport(K.shape, ns, sups, len(kept), skipped, fitted, theory, R,
                                 R_source, maxmod, tolerance, verdict, resid)


# -- overconvergence ------------------------------------------------------------


def phi(R, alpha) -> mpfr:
    R, alpha = to_mpfr(R), to_mpfr(alpha)
    return (1 / (4 * R) + mpfr(1) / 2) ** (1 + alpha) * (R + mpfr(1) / 2)


def delta0(alpha, prec: int = 128) -> mpfr:
    """Length of the interval (1/2, 1/2 + delta0) on which phi(., alpha) < 1.

    phi(1/2) = 1 and phi decreases just to the right of 1/2 when alpha > 0,
    then grows without bound; the crossing back through 1 is bracketed and
    bisected.
    """
    with precision(prec):
        alpha = to_mpfr(alpha)
        if not alpha > 0:
            raise ParameterError("alpha must be positive")
        half = mpfr(1) / 2
        lo = None
        for k in range(1, prec):
            cand = half + mpfr(2) ** -k
            if phi(cand, alpha) < 1:
                lo = cand
                break
        if lo is None:
            raise ParameterError("phi never drops below 1 near 1/2")
        hi = mpfr(1)
        while phi(hi, alpha) < 1:
            hi *= 2
        for _ in range(prec):
            mid = (lo + hi) / 2
            if phi(mid, alpha) < 1:
                lo = mid
            else:
                hi = mid
        return (lo + hi) / 2 - half


@dataclass
class RadiusVerdict:
    radius: mpfr
    subsequence: list[int]
    errors: list
    retained: int
    skipped: int
    decreasing: bool
    terminal_error: mpfr | None
    success: bool


@dataclass
class ScanReport:
    z0: mpc
    R_f: mpfr
    R_source: str
    verdicts: list[RadiusVerdict]
    largest_working_radius: mpfr | None
    failure_radii: list
    alpha: mpfr | None
    phi_delta0: mpfr | None
    threshold: mpfr


def overconvergence_scan(f: PowerSeries, entries: Sequence[PadeEntry], windows: Sequence[Window],
                         z0, radii: Sequence, excl: ExclusionSet | None = None, R_f=None,
                         threshold=mpfr("1e-6"), n_r: int = 32, n_theta: int = 32,
                         prec: int | None = None, threads: int = 1) -> ScanReport:
    """Errors of the window-end subsequence on disks around a regular point.

    Each trial disk drops points inside the closed disk |z| <= |z0| (the
    region where convergence is already known) and points in the exclusion
    set.  Success at a radius means strictly decreasing sup-errors along the
    subsequence (exact zeros excepted) and a terminal error below ``threshold``.
    """
    prec = prec or DEFAULT_PRECISION
    if not windows:
        raise ParameterError("overconvergence_scan needs at least one window")
    if not f.has_reference:
        raise CapabilityError(f"{f.name}: no reference evaluator")
    with precision(prec):
        z0 = to_mpc(z0)
        if not f.meta.is_regular(z0):
            raise CapabilityError(f"{f.name}: z0={complex(z0)} is not a declared regular point")
        if R_f is None:
            R_f, src = resolve_radius(f, prec=prec)
        else:
            R_f, src = to_mpfr(R_f), "caller"
        by_n = {e.n: e for e in entries}
        subseq = sorted({w.n_hi for w in windows if w.n_hi in by_n})
        if not subseq:
            raise ParameterError("no window end has a computed entry")
        sub_entries = [by_n[n] for n in subseq]
        inner = abs(z0)
        verdicts = []
        for r in radii:
            grid = disk_grid(z0, r, n_r, n_theta).exclude(excl, lambda z: abs(z) <= inner)
            pts = [grid.points[i] for i in grid.retained]
            kept, errors, skipped = point_errors(f, sub_entries, pts, prec, threads)
            if not kept:
                verdicts.append(RadiusVerdict(to_mpfr(r), subseq, [], 0, skipped, False, None, False))
                continue
            sups = [max(errs) for errs in errors]
            # an error that is already exactly zero cannot decrease further
            decreasing = all(a > b or a == b == 0 for a, b in zip(sups, sups[1:]))
            terminal = sups[-1]
            verdicts.append(RadiusVerdict(to_mpfr(r), subseq, sups, len(kept), skipped, decreasing,
                                          terminal, decreasing and terminal < threshold))
        ok = [v.radius for v in verdicts if v.success]
        ratios = [Fraction(w.n_lo, w.n_hi) for w in windows if not w.open_end and w.n_lo > 0]
        alpha = d0 = None
        if ratios:
            tail = ratios[len(ratios) // 2:]
            alpha = 1 / to_mpfr(max(tail)) - 1
            if alpha > 0:
                d0 = delta0(alpha)
        return ScanReport(z0, R_f, src, verdicts, max(ok) if ok else None,
                          [v.radius for v in verdicts if not v.success], alpha, d0,
                          to_mpfr(threshold))


# -- free poles and denominator growth -----------------------------------------------


@dataclass
class PoleDistance:
    n: int
    distance: mpfr | None
    matched: list
    deficit: int


def pole_proximity(entries: Sequence[PadeEntry], true_poles: Sequence) -> list[PoleDistance]:
    """Greedy nearest-neighbour matching of inner roots to the given poles.

    The reported distance is the largest matched distance; missing roots are
    counted as a deficit instead of raising.
    """
    out = []
    for e in entries:
        if e.normalized is None:
            raise ParameterError(f"entry ({e.n},{e.m}) has no normalized denominator")
        poles = [to_mpc(p) for p in true_poles]
        free = list(e.normalized.inner_roots)
        matched, worst = [], None
        for p in poles:
            if not free:
                break
            k = min(range(len(free)), key=lambda i: abs(free[i] - p))
            d = abs(free.pop(k) - p)
            matched.append(d)
            worst = d if worst is None else max(worst, d)
        out.append(PoleDistance(e.n, worst, matched, len(poles) - len(matched)))
    return out


def envelope_constant(ns: Sequence[int], values: Sequence, rate) -> mpfr:
    """Smallest C with value_n <= C * rate^n for every listed n."""
    rate = to_mpfr(rate)
    return max((to_mpfr(v) / rate**n for n, v in zip(ns, values) if v is not None), default=mpfr(0))


def denominator_bounds(entries: Sequence[PadeEntry], K: CompactGrid, thetas=(0.05, 0.1, 0.2),
                       excl: ExclusionSet | None = None, prec: int | None = None) -> dict:
    """Empirical growth of ||Q_n||_K and of 1/min |Q_n| on K minus the exclusion set.

    For the first, the fitted base C is the largest ||Q_n||^(1/m_n); for the
    second, C_theta is the largest (1/min|Q_n|) e^(-n theta).
    """
    with precision(prec or DEFAULT_PRECISION):
        full = [K.points[i] for i in K.retained]
        cut = K.exclude(excl) if excl is not None else K
        kept = [K.points[i] for i in cut.retained]
        rows = []
        base = mpfr(0)
        for e in entries:
            if e.n < 1:
                continue
            norm = max(abs(e.Q.eval_hp(z)) for z in full)
            low = min(abs(e.Q.eval_hp(z)) for z in kept) if kept else None
            if e.m > 0:
                base = max(base, norm ** (mpfr(1) / e.m))
            rows.append({"n": e.n, "m": e.m, "sup_Q": norm, "inv_min_Q": INF if low == 0 else 1 / low})
        consts = {}
        for th in thetas:
            consts[th] = max((r["inv_min_Q"] * gmpy2.exp(-r["n"] * to_mpfr(th)) for r in rows),
                             default=mpfr(0))
        return {"rows": rows, "sup_base": base, "inv_min_constants": consts}


def refinement_check(f: PowerSeries, entries: Sequence[PadeEntry], center, radius, n_r: int,
                     n_theta: int, excl: ExclusionSet | None = None, prec: int | None = None,
                     threads: int = 1) -> list[dict]:
    """Doubling a nested disk grid may raise the sup-error only by the local Lipschitz slack.

    The slack is the largest difference quotient between neighbouring coarse
    samples times the coarse spacing.
    """
    prec = prec or DEFAULT_PRECISION
    with precision(prec):
        coarse = disk_grid(center, radius, n_r, n_theta)
        fine = disk_grid(center, radius, 2 * n_r, 2 * n_theta)
        cg = coarse.exclude(excl) if excl is not None else coarse
        fg = fine.exclude(excl) if excl is not None else fine
        cpts = {i: coarse.points[i] for i in cg.retained}
        ckept, cerr, _ = point_errors(f, entries, list(cpts.values()), prec, threads)
        fpts = [fine.points[i] for i in fg.retained]
        _, ferr, _ = point_errors(f, entries, fpts, prec, threads)
        order = list(cpts.keys())
        pos = {order[k]: j for j, k in enumerate(ckept)}
        out = []
        for k, e in enumerate(entries):
            vals = {i: cerr[k][j] for i, j in pos.items()}
            lip = mpfr(0)
            for i in vals:
                # neighbours: next angle on the same circle, next circle at the same angle
                ring, col = (i - 1) // n_theta, (i - 1) % n_theta
                if i == 0:
                    continue
                for nb in (1 + ring * n_theta + (col + 1) % n_theta, i + n_theta):
                    if nb in vals:
                        dz = abs(coarse.points[i] - coarse.points[nb])
                        if dz > 0:
                            lip = max(lip, abs(vals[i] - vals[nb]) / dz)
            cs = max(vals.values()) if vals else mpfr(0)
            fs = max(ferr[k]) if ferr[k] else mpfr(0)
            slack = lip * coarse.spacing
            out.append({"n": e.n, "coarse": cs, "fine": fs, "slack": slack,
                        "ok": bool(fs - cs <= slack)})
        return out
