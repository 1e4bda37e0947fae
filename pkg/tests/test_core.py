import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noninf.core import (
    DomainError,
    NullPoint,
    ObservedTable,
    TrialDesign,
    admissible_range,
    binom_pmf_matrix,
    check_margin,
    enumerate_space,
    grid,
    joint_pmf,
    joint_pmf_all,
    std_normal_cdf,
    std_normal_quantile,
    upper_probit,
)


def test_joint_pmf_single_admissible_table():
    d = TrialDesign(4, 3)
    assert joint_pmf(ObservedTable(4, 0), d, NullPoint(1.0, 1.0)) == 1.0


def test_joint_pmf_hand_value():
    # Binomial(2, 0.5) at 1 is 2 * 0.5 * 0.5 = 0.5; the product of two is 0.25
    assert joint_pmf(ObservedTable(1, 1), TrialDesign(2, 2), NullPoint(0.5, 0.0)) == pytest.approx(0.25, abs=1e-15)


def test_joint_pmf_rejects_bad_inputs():
    d = TrialDesign(2, 2)
    with pytest.raises(DomainError):
        joint_pmf(ObservedTable(3, 0), d, NullPoint(0.5, 0.0))
    with pytest.raises(DomainError):
        joint_pmf(ObservedTable(1, 1), d, NullPoint(0.2, 0.5))


@pytest.mark.parametrize("n_t,n_c", [(n_t, n_c) for n_t in range(1, 7) for n_c in range(1, 7)])
def test_pmf_normalised_on_admissible_grid(n_t, n_c):
    d = TrialDesign(n_t, n_c)
    for delta in np.linspace(-1, 1, 21):
        lo, hi = admissible_range(delta)
        pts = np.linspace(lo, hi, 21)
        pmf = joint_pmf_all(d, pts, delta)
        assert np.all(pmf >= 0)
        assert np.allclose(pmf.sum(axis=-1), 1.0, atol=1e-12, rtol=0)


def test_binomial_pmf_boundaries_exact():
    m = binom_pmf_matrix(7, np.array([0.0, 1.0]))
    assert m[0, 0] == 1.0 and m[0, 1:].sum() == 0.0
    assert m[1, -1] == 1.0 and m[1, :-1].sum() == 0.0


def test_binomial_pmf_large_n_no_underflow_nan():
    m = binom_pmf_matrix(2000, np.array([1e-9, 0.5, 1 - 1e-9]))
    assert np.all(np.isfinite(m))
    assert np.allclose(m.sum(axis=1), 1.0)


def test_enumerate_space_small():
    t = [(x.x_t, x.x_c) for x in enumerate_space(TrialDesign(1, 1))]
    assert t == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_enumerate_space_length_and_order():
    d = TrialDesign(8, 19)
    space = enumerate_space(d)
    assert len(space) == 180
    assert len(set(space)) == 180
    assert [d.index(t) for t in space] == list(range(180))


def test_design_validation():
    with pytest.raises(DomainError):
        TrialDesign(0, 3)
    with pytest.raises(DomainError):
        TrialDesign(3, -1)


def test_margin_validation():
    assert check_margin(0.0) == 0.0
    with pytest.raises(DomainError):
        check_margin(1.0)
    with pytest.raises(DomainError):
        check_margin(-0.1)


def test_normal_cdf_values():
    assert std_normal_cdf(0.0) == 0.5
    for z in (0.5, 1, 2, 5):
        assert std_normal_cdf(-z) + std_normal_cdf(z) == pytest.approx(1.0, abs=1e-14)


def _bisect_quantile(p):
    lo, hi = -10.0, 10.0
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if std_normal_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_normal_quantile_against_bisection():
    q = std_normal_quantile(0.975)
    assert q == pytest.approx(_bisect_quantile(0.975), abs=1e-9)
    assert q == pytest.approx(1.959964, abs=1e-6)


def test_normal_cdf_accuracy_vs_erfc():
    for z in np.linspace(-8, 8, 161):
        ref = 0.5 * math.erfc(-z / math.sqrt(2))
        assert abs(std_normal_cdf(z) - ref) <= 1e-12


def test_normal_quantile_infinities_are_explicit():
    assert std_normal_quantile(0.0) == -math.inf
    assert std_normal_quantile(1.0) == math.inf
    with pytest.raises(DomainError):
        std_normal_quantile(1.5)


def test_cdf_monotone():
    v = std_normal_cdf(np.linspace(-8, 8, 10001))
    assert np.all(np.diff(v) >= 0)


@given(st.floats(-6, 6))
def test_quantile_roundtrip(z):
    # round-trip through the lower tail, where the cdf keeps full relative precision
    assert std_normal_quantile(std_normal_cdf(-abs(z))) == pytest.approx(-abs(z), abs=1e-9)


@given(st.floats(1e-300, 0.5))
@settings(max_examples=200)
def test_upper_probit_uses_small_side(p):
    # Phi^{-1}(1 - p) computed from p keeps full precision for tiny p
    assert upper_probit(p) == pytest.approx(-std_normal_quantile(p), rel=1e-12)
    assert upper_probit(1 - p, p) == pytest.approx(std_normal_quantile(p), rel=1e-12)


def test_grid_inclusive():
    g = grid(-1.0, -0.1, 0.002)
    assert g[0] == -1.0 and g[-1] == -0.1
    assert np.all(np.diff(g) <= 0.002 + 1e-15)
    assert grid(0.3, 0.3, 0.1).tolist() == [0.3]
