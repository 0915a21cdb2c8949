from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from padelab.errors import DomainError, ParameterError, ScheduleError
from padelab.pade import compute_entries
from padelab.sequences import (
    DecayProfile,
    Window,
    build_schedule,
    classify_gap_cases,
    classify_ratio_cases,
    decay_profile,
    detect_coeff_gaps,
    detect_decay_windows,
    detect_stationary_runs,
    psi,
    psi_is_increasing,
    decay_bound_check,
    psi_window_search,
)
from padelab.series import exponential, geometric, lacunary_lemniscate, log_branch, rational

LACUNARY_WINDOWS = [(0, 1), (6, 7), (12, 15), (24, 31), (48, 63)]


def spans(ws):
    return [(w.n_lo, w.n_hi) for w in ws]


# -- schedules --------------------------------------------------------------------


def assert_legal(values):
    assert values[0] == 0
    assert all(0 <= b - a <= 1 for a, b in zip(values, values[1:]))
    assert all(v <= n for n, v in enumerate(values))


@given(st.sampled_from(["sqrt", "n-log2"]), st.fractions(min_value=Fraction(1, 10), max_value=5),
       st.integers(1, 10_000))
def test_rule_schedules_are_legal(rule, c, horizon):
    s = build_schedule(rule, horizon, c=c)
    assert len(s.values) == horizon + 1
    assert_legal(s.values)


@given(st.integers(0, 50), st.integers(1, 10_000))
def test_constant_schedule_clips_at_start(m, horizon):
    s = build_schedule("constant", horizon, m=m)
    assert_legal(s.values)
    assert s.values[-1] == min(m, horizon)


def test_sqrt_schedule_values():
    assert build_schedule("sqrt", 10).values == [0, 1, 1, 1, 2, 2, 2, 2, 2, 3, 3]


@pytest.mark.parametrize("values", [[1, 1, 1], [0, 2, 2], [0, 1, 0], [0, 1, 2, 4]])
def test_illegal_explicit_schedules(values):
    with pytest.raises(ScheduleError):
        build_schedule("explicit", values=values)


def test_explicit_schedule_accepts_legal_list():
    s = build_schedule("explicit", values=[0, 1, 1, 2, 2, 2])
    assert s.horizon == 5 and s.cells()[3] == (3, 2)


def test_unknown_rule():
    with pytest.raises(ScheduleError):
        build_schedule("cubic", 10)


# -- windows ---------------------------------------------------------------------------


def test_window_is_half_open():
    w = Window(6, 7, "coeff-gap")
    assert list(w.indices()) == [7]
    assert w.ratio == Fraction(6, 7)
    with pytest.raises(ParameterError):
        Window(3, 3, "decay")


def test_lacunary_windows_coincide():
    f = lacunary_lemniscate([0, 0, 1, -1], 2)
    sched = build_schedule("constant", 64, m=0)
    entries = compute_entries(f, sched.cells())
    gaps = detect_coeff_gaps(f, 64)
    profile = decay_profile(entries, f)
    decay = detect_decay_windows(profile)
    stationary = detect_stationary_runs(entries, sched)
    assert spans(gaps) == spans(decay) == spans(stationary) == LACUNARY_WINDOWS
    ratios = [w.ratio for w in gaps[1:]]
    # (3 * 2^j, 4 * 2^j - 1]: ratios decrease toward 3/4
    assert all(a > b > Fraction(3, 4) for a, b in zip(ratios, ratios[1:]))
    assert [Fraction(w.n_lo, w.n_hi + 1) for w in gaps[1:]] == [Fraction(3, 4)] * 4


def test_gap_cases_on_lacunary_series():
    f = lacunary_lemniscate([0, 0, 1, -1], 2)
    res = classify_gap_cases(f, detect_coeff_gaps(f, 64), R0=f.meta.R0)
    assert res["all_zero"] and res["case_b"] and not res["case_a"]


def test_ratio_cases():
    shrinking = [Window(2**k, 4**k, "decay") for k in range(1, 6)]
    res = classify_ratio_cases(shrinking)
    assert res["case_a"] and res["case_b"]
    assert not classify_ratio_cases([])["case_b"]


def test_flat_geometric_profile_has_no_decay_windows():
    entries = compute_entries(geometric(), [(n, 0) for n in range(30)])
    profile = decay_profile(entries, geometric(), R=1)
    assert detect_decay_windows(profile) == []


def test_synthetic_profile_windows_exactly_as_constructed():
    values = [0] + [1] * 10 + [Fraction(1, 4)] * 10 + [1] * 20 + [Fraction(1, 4)] * 40 + [1] * 20
    p = DecayProfile.synthetic(values, 1)
    assert spans(detect_decay_windows(p)) == [(10, 20), (40, 80)]


def test_merge_gap_joins_close_runs():
    values = [0] + [1] * 10 + [Fraction(1, 4)] * 5 + [1] * 2 + [Fraction(1, 4)] * 5 + [1] * 10
    p = DecayProfile.synthetic(values, 1)
    assert spans(detect_decay_windows(p, merge_gap=3)) == [(10, 22)]
    assert spans(detect_decay_windows(p, merge_gap=1)) == [(10, 15), (17, 22)]


def test_decay_needs_finite_baseline():
    entries = compute_entries(exponential(), [(n, 0) for n in range(10)])
    profile = decay_profile(entries, exponential())
    with pytest.raises(ParameterError):
        detect_decay_windows(profile)


def test_profile_flags():
    f = rational([1, 2], [1, 1])
    entries = compute_entries(f, [(n, 2) if n >= 2 else (n, n) for n in range(8)])
    p = decay_profile(entries, f, R=2)
    assert p.flags[0] == "skip"
    assert "exact" in p.flags
    log_entries = compute_entries(log_branch(1), build_schedule("sqrt", 20).cells())
    q = decay_profile(log_entries, log_branch(1))
    assert set(q.flags[1:]) <= {"ok", "zero", "block"}


def test_stationary_run_checks_schedule():
    entries = compute_entries(geometric(), [(n, 1) for n in range(6)])
    with pytest.raises(ParameterError):
        detect_stationary_runs(entries, build_schedule("constant", 5, m=0))


# -- psi ---------------------------------------------------------------------------------

psi_params = st.tuples(
    st.integers(2, 5000),
    st.floats(1, 50),
    st.floats(1, 50),
    st.integers(0, 6),
    st.floats(0.001, 1.0),
)


@given(psi_params)
def test_psi_is_increasing_for_small_tau(params):
    n_k, C1, C4, m, tau = params
    assert psi_is_increasing(n_k, C1, C4, m, tau)
    xs = [0, 1, n_k // 3, n_k // 2, n_k - 1]
    vals = [psi(n_k, x, C1, C4, m, tau) for x in sorted(set(xs))]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


@given(st.integers(2, 200), st.floats(1, 10), st.floats(1, 10), st.integers(0, 3), st.floats(0.01, 40))
def test_psi_monotonicity_criterion_is_exact(n_k, C1, C4, m, tau):
    xs = range(0, n_k)
    vals = [psi(n_k, x, C1, C4, m, tau) for x in xs]
    if psi_is_increasing(n_k, C1, C4, m, tau):
        assert all(a <= b + 1e-12 * abs(b) for a, b in zip(vals, vals[1:]))
    else:
        assert all(a >= b - 1e-12 * abs(b) for a, b in zip(vals, vals[1:]))


def test_psi_decreases_for_large_tau():
    assert not psi_is_increasing(10, 1, 1, 0, 5)
    assert psi(10, 0, 1, 1, 0, 5) > psi(10, 5, 1, 1, 0, 5)


def test_psi_domain():
    with pytest.raises(DomainError):
        psi(10, 10)


def test_psi_window_search_on_known_decay():
    tau = 0.5
    values = [0] + [math.exp(-tau)] * 200
    p = DecayProfile.synthetic(values, 1)
    found, status = psi_window_search(p, [60, 100, 150, 200], 1, 1, 0)
    assert status["status"] == "ok" and abs(status["tau"] - tau) < 1e-12
    for w in found:
        assert w.l_k >= 1 and w.verified
        assert psi(w.n_k, w.l_k, 1, 1, 0, tau) < -tau / 2
        assert w.l_k + 1 == w.n_k or psi(w.n_k, w.l_k + 1, 1, 1, 0, tau) >= -tau / 2


def test_psi_window_search_small_anchor_is_skipped():
    p = DecayProfile.synthetic([0] + [0.5] * 10, 1)
    found, _ = psi_window_search(p, [1], 1, 1, 0, tau=0.1)
    assert found[0].skipped and found[0].l_k is None


def test_psi_window_search_constants():
    p = DecayProfile.synthetic([0] + [0.5] * 10, 1)
    with pytest.raises(ParameterError):
        psi_window_search(p, [5], 0.5, 1)


def test_psi_window_search_reports_no_decay():
    p = DecayProfile.synthetic([0] + [1] * 10, 1)
    found, status = psi_window_search(p, [5, 10])
    assert found == [] and "tau" in status["status"]


def test_decay_bound_check_compares_both_radii():
    p = DecayProfile.synthetic([0] + [0.3] * 20, 1)
    res = decay_bound_check(p, range(1, 21), 1, 2)
    assert res["below_inverse_R_f"] and res["below_inverse_R_m"]
    res = decay_bound_check(p, range(1, 21), 1, 4)
    assert not res["below_inverse_R_m"]
