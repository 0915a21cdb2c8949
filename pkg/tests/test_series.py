from __future__ import annotations

import math
import threading
from fractions import Fraction

import gmpy2
import pytest
from hypothesis import given
from hypothesis import strategies as st

from padelab.errors import CapabilityError, DomainError, ParameterError
from padelab.hp import precision, to_mpc
from padelab.series import (
    PowerSeries,
    catalog_make,
    estimate_r0,
    estimate_rm,
    exponential,
    geometric,
    hankel_det,
    lacunary_lemniscate,
    log_branch,
    rational,
    resolve_radius,
    taylor_gap,
)


def test_geometric_coefficients_are_ones():
    assert geometric().coeffs(12) == [Fraction(1)] * 12


def test_log_branch_coefficients():
    f = log_branch(2)
    assert f.coeff(0) == 0
    assert [f.coeff(j) for j in range(1, 5)] == [Fraction(1, j * 2**j) for j in range(1, 5)]


def test_exponential_coefficients():
    f = exponential(Fraction(1, 2))
    assert [f.coeff(j) for j in range(6)] == [Fraction(1, 2**j * math.factorial(j)) for j in range(6)]


def test_rational_with_multiplicity_and_polynomial_part():
    f = rational([2], [3], multiplicities=[2], polynomial=[1, 1])
    # 3/(2-z)^2 = (3/4) sum (j+1) (z/2)^j
    expected = [Fraction(3, 4) * (j + 1) / 2**j for j in range(6)]
    expected[0] += 1
    expected[1] += 1
    assert f.coeffs(6) == expected
    assert f.meta.exact_type == (3, 2)


def test_lacunary_gap_structure():
    f = lacunary_lemniscate([0, 0, 1, -1], 2)
    cs = f.coeffs(70)
    zeros = [n for n, c in enumerate(cs) if c == 0]
    # z^2(1-z) raised to 2^j spans degrees [2^(j+1), 3 * 2^j]; gaps sit in between
    for lo, hi in [(6, 8), (12, 16), (24, 32), (48, 64)]:
        assert all(cs[n] == 0 for n in range(lo + 1, hi))
        assert cs[hi] != 0 and cs[lo] != 0
    assert 0 in zeros and 1 in zeros


def test_lacunary_rejects_overlapping_terms():
    with pytest.raises(ParameterError, match="gap condition"):
        lacunary_lemniscate([0, 1, 0, 1], 2)
    with pytest.raises(ParameterError):
        lacunary_lemniscate([1, 1], 2)


def test_lacunary_radius_and_regular_point():
    f = lacunary_lemniscate([0, 0, 1, -1], 2)
    R = f.meta.R_f
    with precision(128):
        # largest disk on which max |P| stays below 1; |P| peaks on the negative axis
        assert 0.75 < float(R) < 0.76
        z0 = f.meta.regular_points[0]
        assert f.meta.is_regular(z0)


def test_taylor_gap_masks():
    f = taylor_gap(2, intervals=[[2, 4]])
    assert f.coeffs(6) == [1, Fraction(1, 2), Fraction(1, 4), 0, 0, Fraction(1, 32)]
    g = taylor_gap(1, rule="dyadic-alternating", phase=0)
    masked = [n for n in range(1, 17) if g.coeff(n) == 0]
    assert masked == [2, 5, 6, 7, 8]  # (2^k, 2^(k+1)] for even k


@pytest.mark.parametrize("kind, params, msg", [
    ("rational", {"poles": [0], "residues": [1]}, "pole at 0"),
    ("rational", {"poles": [1, 1], "residues": [1, 1]}, "duplicate"),
    ("rational", {"poles": [1], "residues": [1, 2]}, "equal length"),
    ("log-branch", {"b": 0}, "branch point"),
    ("algebraic-branch", {"alpha": 2}, "non-integer"),
    ("taylor-gap", {"radius": 1}, "exactly one"),
    ("taylor-gap", {"rule": "dyadic-alternating", "phase": 2}, "phase"),
])
def test_catalog_parameter_errors(kind, params, msg):
    with pytest.raises(ParameterError, match=msg):
        catalog_make(kind, **params)


def test_unknown_kind():
    with pytest.raises(ParameterError):
        catalog_make("bessel")


def test_reference_domain_and_capability():
    f = log_branch(1)
    with pytest.raises(DomainError):
        f.reference_eval(2)
    g = PowerSeries.from_coefficients([1, 2, 3])
    assert not g.has_reference
    with pytest.raises(CapabilityError):
        g.reference_eval(0.1)
    with pytest.raises(DomainError):
        lacunary_lemniscate([0, 0, 1, -1]).reference_eval(2)


def test_memo_is_shared_across_threads():
    f = exponential()
    out = []
    ts = [threading.Thread(target=lambda: out.append(f.coeffs(200))) for _ in range(4)]
    for t in ts:
        t.start()
    for t in ts:
        t.join()
    assert all(o == out[0] for o in out)


CATALOG_SAMPLES = [
    ("rational", {"poles": [1, 2], "residues": [1, 1]}),
    ("rational", {"poles": ["3/2", -2], "residues": [2, "-1/3"], "multiplicities": [2, 1]}),
    ("log-branch", {"b": 1}),
    ("log-branch", {"b": "-3/2"}),
    ("algebraic-branch", {"b": 1, "alpha": "1/2"}),
    ("lacunary-lemniscate", {"P": [0, 0, 1, -1], "g": 2}),
    ("taylor-gap", {"radius": 2, "intervals": [[3, 7]]}),
    ("taylor-gap", {"radius": 1, "rule": "dyadic-alternating"}),
    ("exponential", {"c": 2}),
]


@given(st.sampled_from(CATALOG_SAMPLES), st.floats(0, 2 * math.pi), st.floats(0.0, 0.4))
def test_reference_matches_taylor_sum(sample, theta, scale):
    """Coefficient stream and reference evaluator describe the same function."""
    kind, params = sample
    f = catalog_make(kind, **params)
    R0 = f.meta.R0
    r = scale * (1 if R0 == math.inf else float(R0))
    with precision(128):
        z = to_mpc(complex(r * math.cos(theta), r * math.sin(theta)))
        partial = gmpy2.mpc(0)
        zp = gmpy2.mpc(1)
        for c in f.coeffs(160):
            partial += gmpy2.mpfr(c.numerator) / c.denominator * zp
            zp *= z
        assert abs(partial - f.reference_eval(z)) < 1e-25


@given(st.lists(st.integers(1, 5), min_size=1, max_size=3, unique=True), st.integers(0, 6))
def test_hankel_degenerates_above_pole_count(ints, n):
    poles = [Fraction(k, 2) + 1 for k in ints]
    f = rational(poles, [1] * len(poles))
    q = len(poles)
    assert hankel_det(f, q, n) != 0
    assert hankel_det(f, q + 1, n) == 0


def test_hankel_estimate_reports_degeneracy():
    f = rational([1, 2], [1, 1])
    est = estimate_rm(f, 2, 24)
    assert est.degenerate and est.infinite
    est1 = estimate_rm(f, 1, 48)
    assert abs(float(est1.value) - 2) < 0.1


def test_cauchy_hadamard_estimate():
    assert abs(float(estimate_r0(log_branch(2), 64).value) - 2) < 0.2
    assert estimate_r0(PowerSeries.from_coefficients([1, 1]), 16).infinite
    with pytest.raises(ParameterError):
        estimate_r0(geometric(), 8)


def test_resolve_radius_provenance():
    f = rational([1, 2], [1, 1])
    R, src = resolve_radius(f, m=1)
    assert R == 2 and src == "declared"
    g = PowerSeries.from_rule(lambda j: Fraction(1, 3**j) + Fraction(1, 5**j))
    R, src = resolve_radius(g, m=1, N=40)
    assert src.startswith("estimated") and abs(float(R) - 5) < 0.75
