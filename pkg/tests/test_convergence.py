from __future__ import annotations

import math
from fractions import Fraction

import gmpy2
import pytest
from hypothesis import given
from hypothesis import strategies as st

from padelab.convergence import (
    annulus_grid,
    delta0,
    denominator_bounds,
    disk_grid,
    envelope_constant,
    fit_rate,
    grid_errors,
    make_grid,
    omega_disks,
    overconvergence_scan,
    phi,
    pole_proximity,
    rectangle_grid,
    refinement_check,
)
from padelab.errors import CapabilityError, GridError, ParameterError
from padelab.hp import precision, to_mpc, to_mpfr
from padelab.pade import compute_entries, normalize_denominator, pade
from padelab.sequences import Window
from padelab.series import PowerSeries, exponential, geometric, lacunary_lemniscate, log_branch, rational


def ray(f, values, R=1):
    entries = compute_entries(f, list(enumerate(values)))
    for e in entries:
        normalize_denominator(e, R)
    return entries


# -- exclusion sets ----------------------------------------------------------------


def test_single_disk_radius():
    with precision(256):
        e = pade(geometric(), 1, 1)
        normalize_denominator(e, 1)
        excl = omega_disks([e], Fraction(3, 5))
        assert [(n, r) for n, _, r in excl.disks] == [(1, Fraction(1, 10))]
        assert excl.contains(1.05) and not excl.contains(1.2)


def test_taylor_row_has_no_disks():
    entries = ray(exponential(), [0] * 10)
    excl = omega_disks(entries, Fraction(1, 10))
    assert excl.disks == [] and excl.sigma_bound == 0


@given(st.integers(2, 40), st.sampled_from([1, 2, 3]), st.fractions(min_value=Fraction(1, 100), max_value=2))
def test_sigma_bound_is_exact_partial_zeta(horizon, m, eps):
    f = rational([1, 2, 3], [1, -1, 2])
    entries = ray(f, [min(n, m) for n in range(horizon + 1)], R=3)
    excl = omega_disks(entries, eps)
    expected = eps / 3 * sum(Fraction(1, n * n) for n in range(1, horizon + 1) if entries[n].mu > 0)
    assert excl.sigma_bound == expected == excl.diameter_sum()
    assert excl.sigma_bound < eps
    assert excl.sigma_bound <= eps * Fraction(math.pi**2 / 18) * Fraction(1001, 1000)


def test_omega_requires_normalization():
    e = pade(geometric(), 2, 1)
    with pytest.raises(ParameterError):
        omega_disks([e], Fraction(1, 10))
    with pytest.raises(ParameterError):
        omega_disks([], 0)


# -- grids ---------------------------------------------------------------------------


def test_grids_lie_in_their_shapes():
    with precision(128):
        d = disk_grid(0.1, 0.5, 8, 8)
        assert all(abs(z - to_mpc(0.1)) <= to_mpfr(0.5) * (1 + 1e-30) for z in d.points)
        a = annulus_grid(0, 0.2, 0.4, 4, 8)
        assert all(0.2 - 1e-15 <= abs(z) <= 0.4 + 1e-15 for z in a.points)
        s = make_grid("annular-sector", center=0, r_in=0.1, r_out=0.3, n_r=3, n_theta=5, theta0=0, theta1=1)
        assert all(-1e-30 <= gmpy2.phase(z) <= 1 + 1e-30 for z in s.points)
        r = rectangle_grid(-1, 1, 0, 0.5, 5, 3)
        assert len(r.points) == 15


def test_doubling_keeps_coarse_points():
    with precision(128):
        coarse = {complex(z) for z in disk_grid(0, 1, 4, 6).points}
        fine = {complex(z) for z in disk_grid(0, 1, 8, 12).points}
        assert all(min(abs(c - f) for f in fine) < 1e-15 for c in coarse)


def test_jitter_is_seeded():
    with precision(128):
        a = disk_grid(0, 1, 4, 4, jitter=0.3, seed=7).points
        b = disk_grid(0, 1, 4, 4, jitter=0.3, seed=7).points
        c = disk_grid(0, 1, 4, 4, jitter=0.3, seed=8).points
        assert a == b and a != c


def test_grid_errors_for_bad_shapes():
    with pytest.raises(GridError):
        make_grid("hexagon")
    with pytest.raises(GridError):
        annulus_grid(0, 0.5, 0.2)
    with pytest.raises(GridError):
        make_grid("annular-sector", center=0, r_in=0.1, r_out=0.3)


@given(st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=1, max_size=6),
       st.integers(1, 12))
def test_no_retained_point_inside_exclusion(centers, n):
    with precision(128):
        e = pade(rational([1], [1]), 1, 1)
        normalize_denominator(e, 1)
        excl = omega_disks([e], Fraction(1, 2))
        excl.disks = [(n, to_mpc(complex(x, y)), Fraction(1, 5)) for x, y in centers]
        grid = disk_grid(0, 1, 8, 16).exclude(excl)
        for i in grid.retained:
            z = grid.points[i]
            assert all(abs(z - c) >= r for _, c, r in excl.disks)
        for i in grid.excluded:
            assert excl.contains(grid.points[i])


# -- error grids ----------------------------------------------------------------------


def test_geometric_errors_are_exactly_zero():
    with precision(256):
        entries = ray(geometric(), [0] + [1] * 8)
        K = disk_grid(0, 1.5, 8, 8)
        rep = grid_errors(geometric(), entries, K, omega_disks(entries, Fraction(1, 10)))
        assert all(e == 0 for e in rep.sup_errors[1:])
        assert rep.verdict == "exact"


def test_rational_row_rate_small_horizon():
    f = rational([1, 2], [1, 1])
    with precision(256):
        entries = ray(f, [0] + [1] * 20, R=2)
        rep = grid_errors(f, entries, disk_grid(0, 0.5, 8, 8), omega_disks(entries, Fraction(1, 10)))
        assert rep.theory_rate == to_mpfr(0.25)
        assert rep.verdict == "agree" and abs(rep.fitted_rate - 0.25) < 0.05


def test_grid_errors_guards():
    f = rational([1, 2], [1, 1])
    entries = ray(f, [0, 1, 1, 1], R=2)
    with pytest.raises(GridError):
        grid_errors(f, entries, disk_grid(0, 0.5, 2, 4))
    g = PowerSeries.from_coefficients([1, 1])
    with pytest.raises(CapabilityError):
        grid_errors(g, entries, disk_grid(0, 0.5, 8, 8))


def test_points_outside_reference_region_are_skipped():
    f = log_branch(1)
    entries = ray(f, [0, 1, 1, 1, 2, 2], R=1)
    K = rectangle_grid(0.5, 1.5, -0.1, 0.1, 11, 11)  # straddles the cut on [1, inf)
    rep = grid_errors(f, entries, K, min_points=50)
    assert rep.skipped > 0 and rep.retained + rep.skipped == 121


def test_fit_rate_recovers_geometric_decay():
    with precision(128):
        ns = list(range(30))
        errs = [to_mpfr(Fraction(1, 3)) ** n for n in ns]
        assert abs(fit_rate(ns, errs) - to_mpfr(Fraction(1, 3))) < 1e-20
        assert fit_rate([0, 1], [1, 0]) is None


def test_refinement_within_lipschitz_slack():
    f = rational([1, 2], [1, 1])
    entries = ray(f, [0] + [1] * 6, R=2)
    rows = refinement_check(f, entries, 0, 0.5, 4, 8)
    assert all(r["ok"] for r in rows)


def test_denominator_bounds_shape():
    f = rational([1, 2], [1, 1])
    entries = ray(f, [0] + [1] * 6, R=2)
    res = denominator_bounds(entries, disk_grid(0, 0.5, 4, 8))
    assert len(res["rows"]) == 6 and res["sup_base"] > 1


# -- poles ------------------------------------------------------------------------------


def test_geometric_pole_distance_is_zero():
    entries = ray(geometric(), [0] + [1] * 6)
    pd = pole_proximity(entries[1:], [1])
    assert all(p.distance == 0 and p.deficit == 0 for p in pd)


def test_missing_roots_are_a_deficit():
    entries = ray(exponential(), [0, 0, 0])
    pd = pole_proximity(entries, [2])
    assert all(p.deficit == 1 and p.distance is None for p in pd)
    assert pole_proximity(entries, [])[0].deficit == 0


def test_envelope_constant():
    assert envelope_constant([1, 2, 3], [0.5, 0.5, 0.05], 0.5) == 2


# -- overconvergence ---------------------------------------------------------------------


def test_phi_and_delta0():
    with precision(128):
        assert phi(0.5, 1) == 1
        for alpha in (0.25, 1 / 3, 1.0):
            d = delta0(alpha)
            assert d > 0
            assert abs(phi(0.5 + d, alpha) - 1) < 1e-20
            assert phi(0.5 + d / 2, alpha) < 1
        with pytest.raises(ParameterError):
            delta0(0)


def test_geometric_scan_is_degenerate_success():
    f = geometric()
    entries = ray(f, [0] + [1] * 12)
    rep = overconvergence_scan(f, entries, [Window(2, 4, "explicit"), Window(6, 12, "explicit")],
                               -1, [0.1, 0.3], n_r=4, n_theta=8)
    assert all(v.success and v.terminal_error == 0 for v in rep.verdicts)


def test_scan_requires_regular_point():
    f = log_branch(1)
    entries = ray(f, [0, 1, 1, 1])
    with pytest.raises(CapabilityError):
        overconvergence_scan(f, entries, [Window(1, 3, "explicit")], 1, [0.1])


def test_lacunary_scan_small():
    f = lacunary_lemniscate([0, 0, 1, -1], 2)
    entries = compute_entries(f, [(n, 0) for n in range(32)])
    windows = [Window(6, 7, "coeff-gap"), Window(12, 15, "coeff-gap"), Window(24, 31, "coeff-gap")]
    rep = overconvergence_scan(f, entries, windows, f.meta.regular_points[0], [0.05, 0.1], n_r=6, n_theta=8)
    assert rep.verdicts[0].decreasing
    assert rep.verdicts[0].subsequence == [7, 15, 31]
    assert rep.alpha > 0 and rep.phi_delta0 > 0
