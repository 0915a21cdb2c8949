"""Ray schedules, decay profiles of leading numerator coefficients, and
detectors for gap, decay and stationary windows."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import gmpy2
from gmpy2 import mpfr

from .errors import DomainError, InvariantViolation, ParameterError, ScheduleError
from .hp import DEFAULT_PRECISION, INF, abs_root, precision, to_mpfr
from .pade import EXACT, PadeEntry, order_of_contact
from .series import PowerSeries, resolve_radius

GROWTH_CLASSES = ("constant", "o(n/log n)", "o(n)")


@dataclass
class RaySchedule:
    rule: str
    params: dict
    values: list[int]
    growth: str

    @property
    def horizon(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, n: int) -> int:
        return self.values[n]

    def cells(self, start: int = 0) -> list[tuple[int, int]]:
        return [(n, self.values[n]) for n in range(start, len(self.values))]


def _check_legal(values: Sequence[int]) -> None:
    for n, m in enumerate(values):
        if not isinstance(m, int) or isinstance(m, bool) or m < 0:
            raise ScheduleError(f"m_{n} = {m!r} is not a nonnegative integer")
        if m > n:
            raise ScheduleError(f"m_{n} = {m} exceeds n")
        if n and not 0 <= m - values[n - 1] <= 1:
            raise ScheduleError(f"m_{n} - m_{n - 1} = {m - values[n - 1]} is not 0 or 1")


def build_schedule(rule: str, horizon: int | None = None, **params) -> RaySchedule:
    """Materialize m_0 .. m_horizon.

    Rule values are clipped to m_n <= min(n, m_{n-1} + 1) and kept
    nondecreasing; explicit lists are validated instead of clipped.
    """
    if rule == "explicit":
        values = list(params.get("values", []))
        if horizon is None:
            horizon = len(values) - 1
        if horizon < 1:
            raise ScheduleError("horizon must be >= 1")
        if len(values) < horizon + 1:
            raise ScheduleError(f"explicit schedule has {len(values)} values, horizon needs {horizon + 1}")
        values = values[: horizon + 1]
        _check_legal(values)
        growth = params.get("growth", "o(n)")
        if growth not in GROWTH_CLASSES:
            raise ScheduleError(f"growth: unknown class {growth!r}")
        if growth == "constant" and values[horizon // 2] != values[-1]:
            raise ScheduleError("growth 'constant' contradicts the explicit values")
        return RaySchedule("explicit", {"values": values, "growth": growth}, values, growth)

    if horizon is None or horizon < 1:
        raise ScheduleError("horizon must be >= 1")
    if rule == "constant":
        m = params.get("m", 0)
        if not isinstance(m, int) or isinstance(m, bool) or m < 0:
            raise ScheduleError("m must be a nonnegative integer")
        raw = lambda n: m  # noqa: E731
        growth, desc = "constant", {"m": m}
    elif rule == "sqrt":
        c = _coefficient(params.get("c", 1))
        c2 = c * c
        raw = lambda n: math.isqrt(math.floor(c2 * n))  # noqa: E731
        growth, desc = "o(n/log n)", {"c": str(c)}
    elif rule == "n-log2":
        c = _coefficient(params.get("c", 1))
        cf = to_mpfr(c)

        def raw(n):
            with precision(128):
                return int(gmpy2.floor(cf * n / gmpy2.log(mpfr(n + 2)) ** 2))

        growth, desc = "o(n/log n)", {"c": str(c)}
    else:
        raise ScheduleError(f"unknown schedule rule {rule!r}")
    values = [0]
    for n in range(1, horizon + 1):
        values.append(max(values[-1], min(raw(n), n, values[-1] + 1)))
    return RaySchedule(rule, desc, values, growth)


def _coefficient(c) -> Fraction:
    try:
        c = Fraction(c)
    except (TypeError, ValueError) as exc:
        raise ScheduleError(f"c: not a number: {c!r}") from exc
    if c <= 0:
        raise ScheduleError("c must be positive")
    return c


# -- decay profile -------------------------------------------------------------

NO_DATA = ("skip", "block", "exact")


@dataclass
class DecayProfile:
    """values[n] = |[z^n] P_n|^(1/n); flags[n] marks how to read it.

    Flags: ``skip`` (n = 0), ``block`` (positive defect off the Taylor row),
    ``exact`` (the entry reproduces f to the contact cap), ``zero`` (the
    coefficient vanishes; decay evidence) and ``ok``.
    """

    values: list
    flags: list[str]
    baseline: mpfr
    baseline_source: str
    schedule_values: list[int] = field(default_factory=list)

    @classmethod
    def synthetic(cls, values: Sequence, baseline, source: str = "synthetic") -> "DecayProfile":
        vals = [mpfr(v) for v in values]
        flags = ["skip"] + ["zero" if v == 0 else "ok" for v in vals[1:]]
        return cls(vals, flags, mpfr(baseline), source)

    @property
    def horizon(self) -> int:
        return len(self.values) - 1

    def has_data(self, n: int) -> bool:
        return self.flags[n] not in NO_DATA


def decay_profile(entries: Sequence[PadeEntry], f: PowerSeries | None = None, R=None,
                  R_source: str | None = None, contact_cap: int | None = None,
                  normalized: bool = False, prec: int | None = None) -> DecayProfile:
    """Profile of the nominal top numerator coefficient along a ray.

    The coefficient read at index n is [z^n] P_n, which is the leading
    coefficient whenever the defect vanishes and equals f_n on the Taylor
    row.  Off the Taylor row a positive defect marks a block interior.
    With ``f`` given, entries that reproduce f up to the contact cap are
    marked exact.  ``normalized`` divides by the scale of the normalized
    denominator, which must already be attached.
    """
    entries = sorted(entries, key=lambda e: e.n)
    if [e.n for e in entries] != list(range(len(entries))):
        raise ParameterError("decay_profile: entries must cover n = 0..horizon")
    with precision(prec or DEFAULT_PRECISION):
        if R is None:
            if f is None:
                raise ParameterError("decay_profile: need f or R for the baseline")
            R, R_source = resolve_radius(f, prec=prec or DEFAULT_PRECISION)
        R = to_mpfr(R) if not isinstance(R, mpfr) else R
        baseline = 1 / R if R != 0 else INF
        values, flags = [], []
        for e in entries:
            c = e.P[e.n]
            if normalized and e.n:
                if e.normalized is None:
                    raise ParameterError("decay_profile: normalized=True needs normalized entries")
                v = abs(to_mpfr(c) / e.normalized.scale) ** (mpfr(1) / e.n) if c else mpfr(0)
            else:
                v = abs_root(c, e.n) if e.n else mpfr(abs(c))
            values.append(v)
            if e.n == 0:
                flags.append("skip")
            elif e.m > 0 and e.defect > 0:
                flags.append("block")
            elif f is not None and e.m > 0 and order_of_contact(f, e, contact_cap) == EXACT:
                flags.append("exact")
            elif c == 0:
                flags.append("zero")
            else:
                flags.append("ok")
        return DecayProfile(values, flags, baseline, R_source or "caller", [e.m for e in entries])


# -- windows --------------------------------------------------------------------


@dataclass
class Window:
    """Half-open index window (n_lo, n_hi]."""

    n_lo: int
    n_hi: int
    kind: str
    stats: dict = field(default_factory=dict)
    open_end: bool = False

    def __post_init__(self):
        if not 0 <= self.n_lo < self.n_hi:
            raise ParameterError(f"window ({self.n_lo}, {self.n_hi}] is empty or negative")

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.n_lo, self.n_hi)

    def indices(self) -> range:
        return range(self.n_lo + 1, self.n_hi + 1)

    def as_dict(self) -> dict:
        return {"n_lo": self.n_lo, "n_hi": self.n_hi, "kind": self.kind,
                "ratio": str(self.ratio), "open_end": self.open_end, **self.stats}


def _runs(mask: Sequence[bool]) -> list[tuple[int, int]]:
    """Maximal runs [a, b] of True."""
    out, start = [], None
    for i, v in enumerate(mask):
        if v and start is None:
            start = i
        elif not v and start is not None:
            out.append((start, i - 1))
            start = None
    if start is not None:
        out.append((start, len(mask) - 1))
    return out


def detect_coeff_gaps(f: PowerSeries, horizon: int) -> list[Window]:
    """Maximal runs of exactly-zero Taylor coefficients among f_1 .. f_horizon."""
    if horizon < 4:
        raise ParameterError("detect_coeff_gaps: horizon must be >= 4")
    fs = f.coeffs(horizon + 1)
    windows = []
    for a, b in _runs([j > 0 and c == 0 for j, c in enumerate(fs)]):
        w = Window(a - 1, b, "coeff-gap", open_end=b == horizon)
        if any(fs[j] for j in w.indices()):
            raise InvariantViolation(f"coefficient gap {w} contains a nonzero coefficient")
        windows.append(w)
    return windows


def _trailing(windows: Sequence[Window], fraction: float = 0.5) -> list[Window]:
    closed = [w for w in windows if not w.open_end]
    if not closed:
        return []
    cut = max(w.n_hi for w in closed) * fraction
    return [w for w in closed if w.n_hi >= cut] or closed[-1:]


def classify_ratio_cases(windows: Sequence[Window], zero_tol: float = 0.1,
                         min_ratio_gap: float = 0.1) -> dict:
    """Finite-horizon surrogates of 'ratio -> 0' (case a) and 'limsup ratio < 1' (case b).

    Only closed windows in the trailing half of the horizon are used.  Case a
    needs nonincreasing trailing ratios ending below ``zero_tol``; case b
    needs every trailing ratio at most ``1 - min_ratio_gap``.
    """
    tail = _trailing(windows)
    ratios = [w.ratio for w in tail]
    if not ratios:
        return {"windows_used": 0, "case_a": False, "case_b": False, "ratios": []}
    monotone = all(x >= y for x, y in zip(ratios, ratios[1:]))
    return {
        "windows_used": len(ratios),
        "ratios": [str(r) for r in ratios],
        "limsup_ratio": str(max(ratios)),
        "liminf_ratio": str(min(ratios)),
        "case_a": monotone and ratios[-1] <= zero_tol,
        "case_b": max(ratios) <= 1 - min_ratio_gap,
    }


def classify_gap_cases(f: PowerSeries, windows: Sequence[Window], R0=None,
                       zero_tol: float = 0.1, min_ratio_gap: float = 0.1,
                       prec: int | None = None) -> dict:
    """Both Ostrowski gap criteria on coefficient windows."""
    out = classify_ratio_cases(windows, zero_tol, min_ratio_gap)
    with precision(prec or DEFAULT_PRECISION):
        if R0 is None:
            from .series import estimate_r0

            top = max((w.n_hi for w in windows), default=16)
            R0 = estimate_r0(f, max(16, top)).value
            src = "estimated: cauchy-hadamard"
        else:
            R0, src = to_mpfr(R0), "caller"
        in_windows = [abs_root(f.coeff(j), j) for w in _trailing(windows) for j in w.indices()]
        lim = max(in_windows, default=mpfr(0))
        out["window_coeff_limsup"] = lim
        out["inverse_R0"] = 1 / R0
        out["R0_source"] = src
        out["all_zero"] = all(f.coeff(j) == 0 for w in windows for j in w.indices())
        out["case_b"] = bool(out["case_b"] and lim < 1 / R0)
    return out


def detect_decay_windows(p: DecayProfile, margin: float = 0.3, min_ratio_gap: float = 0.1,
                         merge_gap: int = 3) -> list[Window]:
    """Runs of indices whose value is at most (1 - margin) * baseline.

    No-data indices never count as decay.  Runs separated by fewer than
    ``merge_gap`` indices are merged; windows with ratio above
    ``1 - min_ratio_gap`` are dropped.
    """
    if not 0 < margin < 1:
        raise ParameterError("margin must lie in (0, 1)")
    if not (gmpy2.is_finite(p.baseline) and p.baseline > 0):
        raise ParameterError("decay windows need a finite positive baseline")
    threshold = (1 - mpfr(margin)) * p.baseline
    mask = [p.has_data(n) and p.values[n] <= threshold for n in range(len(p.values))]
    runs = _runs(mask)
    merged: list[list[int]] = []
    for a, b in runs:
        if merged and a - merged[-1][1] - 1 < merge_gap:
            merged[-1][1] = b
        else:
            merged.append([a, b])
    out = []
    for a, b in merged:
        lo = max(a - 1, 0)
        if lo >= b:
            continue
        w = Window(lo, b, "decay", open_end=b == p.horizon)
        if w.ratio > 1 - Fraction(min_ratio_gap).limit_denominator(10**6):
            continue
        data = [p.values[n] for n in w.indices() if p.has_data(n)]
        w.stats = {
            "max_value": max(data) if data else mpfr(0),
            "decay_fraction": Fraction(sum(mask[n] for n in w.indices()), b - lo),
        }
        out.append(w)
    return out


def detect_stationary_runs(entries: Sequence[PadeEntry], schedule: RaySchedule | None = None
                           ) -> list[Window]:
    """Maximal runs n_k < n <= n_k' with pi_n identical to pi_{n_k}."""
    entries = sorted(entries, key=lambda e: e.n)
    if schedule is not None:
        for e in entries:
            if e.n <= schedule.horizon and e.m != schedule.values[e.n]:
                raise ParameterError(f"entry ({e.n},{e.m}) is not on the schedule")
    same = [False] + [entries[i].same_fraction(entries[i - 1]) for i in range(1, len(entries))]
    out = []
    for a, b in _runs(same):
        lo, hi = entries[a - 1].n, entries[b].n
        w = Window(lo, hi, "stationary", open_end=b == len(entries) - 1)
        anchor = entries[a - 1]
        if not all(entries[i].same_fraction(anchor) for i in range(a, b + 1)):
            raise InvariantViolation(f"stationary run {w} contains distinct fractions")
        out.append(w)
    return out


# -- the psi window construction ------------------------------------------------


def psi(n_k: int, x, C1=1.0, C4=1.0, m=0, tau=0.5) -> float:
    """(C4 x + C1)/(n_k - x) + 2 m x log(n_k)/(n_k - x) - tau n_k/(n_k - x)."""
    if not 0 <= x < n_k:
        raise DomainError(f"psi needs 0 <= x < n_k (x={x}, n_k={n_k})")
    d = n_k - x
    return (C4 * x + C1) / d + 2 * m * x * math.log(n_k) / d - tau * n_k / d


def psi_is_increasing(n_k: int, C1=1.0, C4=1.0, m=0, tau=0.5) -> bool:
    """psi has the form (a x + b)/(n - x) and increases iff a n + b > 0."""
    return n_k * (C4 + 2 * m * math.log(n_k) - tau) + C1 > 0


def _largest_l(n_k, C1, C4, m, tau) -> int:
    """Largest integer l with psi(x) < -tau/2 for every integer 0 < x <= l."""
    target = -tau / 2
    ok = lambda x: psi(n_k, x, C1, C4, m, tau) < target  # noqa: E731
    if psi_is_increasing(n_k, C1, C4, m, tau):
        lo, hi = 0, n_k - 1  # ok holds on 1..lo
        if not ok(1):
            return 0
        lo = 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if ok(mid):
                lo = mid
            else:
                hi = mid - 1
        return lo
    l = 0
    while l + 1 < n_k and ok(l + 1):
        l += 1
    return l


@dataclass
class PsiWindow:
    n_k: int
    l_k: int | None
    psi0: float
    psi_at_l: float | None
    verified: bool | None
    unverified_indices: list = field(default_factory=list)
    skipped: str | None = None
    sensitivity: dict = field(default_factory=dict)


def psi_window_search(p: DecayProfile, anchors: Sequence[int], C1=1.0, C4=1.0, m=0,
                      tau=None, R_m=None) -> tuple[list[PsiWindow], dict]:
    """For each anchor n_k, the largest l_k with psi_{n_k} < -tau/2 on (0, l_k].

    ``tau`` defaults to -log(max_k values[n_k] * R_m); ``R_m`` defaults to
    the profile baseline's inverse.  Each window is then checked against the
    profile: values[v] < 1/R_m for v in [n_k - l_k, n_k].
    """
    if C1 < 1 or C4 < 1:
        raise ParameterError("C1 and C4 must be >= 1")
    R_m = mpfr(1) / p.baseline if R_m is None else to_mpfr(R_m)
    usable = [n for n in anchors if 0 < n <= p.horizon and p.has_data(n)]
    status = {"anchors": list(anchors), "usable_anchors": usable, "R_m": R_m}
    if tau is None:
        if not usable:
            status["status"] = "no anchors with data"
            return [], status
        peak = max(p.values[n] for n in usable) * R_m
        if peak == 0:
            status["status"] = "anchor values all zero; tau unbounded"
            return [], status
        tau = float(-gmpy2.log(peak))
        status["tau_source"] = "estimated from anchors"
    else:
        status["tau_source"] = "caller"
    status["tau"] = tau
    if not tau > 0:
        status["status"] = "tau <= 0: anchors show no decay below 1/R_m"
        return [], status
    out = []
    limit = 1 / R_m
    for n_k in anchors:
        if n_k < 1:
            raise ParameterError("anchors must be positive")
        p0 = psi(n_k, 0, C1, C4, m, tau)
        if p0 >= 0:
            out.append(PsiWindow(n_k, None, p0, None, None, skipped="psi(0) >= 0: n_k too small"))
            continue
        l = _largest_l(n_k, C1, C4, m, tau)
        verified, missing = None, []
        if n_k <= p.horizon:
            bad = []
            for v in range(n_k - l, n_k + 1):
                if not p.has_data(v):
                    missing.append(v)
                elif not p.values[v] < limit:
                    bad.append(v)
            verified = not bad
        sens = {}
        for label, s in (("x10", 10.0), ("x0.1", 0.1)):
            c1, c4 = C1 * s, C4 * s
            q0 = psi(n_k, 0, c1, c4, m, tau)
            sens[label] = None if q0 >= 0 else _largest_l(n_k, c1, c4, m, tau)
        out.append(PsiWindow(n_k, l, p0, psi(n_k, l, C1, C4, m, tau), verified, missing,
                             sensitivity=sens))
    status["status"] = "ok"
    return out, status


def decay_bound_check(p: DecayProfile, subsequence: Sequence[int], R_f, R_m) -> dict:
    """limsup over the subsequence of the profile, against 1/R(f) and 1/R_m.

    The limsup is the maximum over the trailing half of the subsequence
    with data.
    """
    idx = [n for n in subsequence if 0 < n <= p.horizon and p.has_data(n)]
    if not idx:
        return {"status": "no data"}
    cut = idx[-1] / 2
    tail = [n for n in idx if n >= cut]
    lim = max(p.values[n] for n in tail)
    R_f, R_m = to_mpfr(R_f), to_mpfr(R_m)
    return {
        "status": "ok",
        "indices": tail,
        "limsup": lim,
        "below_inverse_R_f": bool(lim < 1 / R_f),
        "below_inverse_R_m": bool(lim < 1 / R_m),
    }
