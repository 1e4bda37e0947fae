import numpy as np
import pytest

from noninf.core import DomainError, NullPoint, ObservedTable, TrialDesign, joint_pmf
from noninf.intervals import ec_correction
from noninf.opchar import (
    DecisionSet,
    all_regions,
    binomial_inverse,
    conditional_size,
    critical_region,
    ec_expectation,
    ec_expectation_grid,
    ec_expectation_study,
    maximal_size,
    maximal_sizes,
    power_curve,
    uniforms,
)
from noninf.stats import p_asy_all, wald_z_all


def _region(design, rejected, delta0=0.1, method="mn"):
    rejected = np.asarray(rejected, bool)
    return DecisionSet(design, method, delta0, 0.05, rejected, np.zeros(design.size))


@pytest.mark.parametrize("method", ["mn", "cz", "ec"])
def test_zero_alpha_gives_empty_region(method):
    region = critical_region(TrialDesign(4, 5), 0.1, 0.0, method)
    assert region.count == 0
    assert len(region.rejected) == 30


def test_zero_alpha_wald_keeps_only_infinite_statistics():
    # Wald is not a valid p-value: zero-variance tables with a positive numerator have p = 0
    design = TrialDesign(4, 5)
    region = critical_region(design, 0.1, 0.0, "wald")
    np.testing.assert_array_equal(region.rejected, np.isposinf(wald_z_all(design, 0.1)))


def test_critical_region_matches_pvalues():
    design = TrialDesign(6, 7)
    region = critical_region(design, 0.1, 0.2, "mn")
    np.testing.assert_array_equal(region.rejected, p_asy_all(design, 0.1) <= 0.1)


def test_unknown_method():
    with pytest.raises(DomainError):
        critical_region(TrialDesign(2, 2), 0.0, 0.05, "bogus")


def test_conditional_size_empty_and_full():
    design = TrialDesign(3, 4)
    point = NullPoint(0.4, -0.1)
    assert conditional_size(_region(design, np.zeros(design.size)), point) == 0.0
    assert conditional_size(_region(design, np.ones(design.size)), point) == pytest.approx(1.0, abs=1e-14)


def test_conditional_size_hand_sum():
    design = TrialDesign(2, 2)
    chosen = [ObservedTable(2, 0), ObservedTable(2, 1), ObservedTable(1, 0), ObservedTable(0, 0)]
    rejected = np.zeros(design.size, bool)
    for t in chosen:
        rejected[design.index(t)] = True
    point = NullPoint(0.5, -0.1)
    expected = sum(joint_pmf(t, design, point) for t in chosen)
    assert conditional_size(_region(design, rejected), point) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("design,delta0,alpha,n_ar", [((5, 11), 0.03, 0.7, 4), ((12, 5), 0.33, 0.1, 1)])
def test_agreement_counts(design, delta0, alpha, n_ar):
    regions = all_regions(TrialDesign(*design), delta0, alpha, ("cz", "ec"))
    ec, cz = regions["ec"].rejected, regions["cz"].rejected
    assert int((ec & ~cz).sum()) == n_ar
    assert not (cz & ~ec).any()


def test_power_curve_first_configuration():
    design = TrialDesign(5, 11)
    deltas = np.round(np.arange(-1.0, 1.0001, 0.01), 10)
    pc = power_curve(design, 0.03, 0.7, 0.95, deltas)
    assert pc.n_ar == 4 and pc.n_ra == 0
    assert pc.n_aa + pc.n_ar + pc.n_rr == design.size
    ok = pc.admissible
    assert not ok[deltas < -0.05].any()
    ec, cz, mn = (pc.reject_prob[m][ok] for m in ("ec", "cz", "mn"))
    assert np.all(ec >= cz - 1e-15)
    assert np.all(mn >= ec - 1e-15)
    assert np.all((0 <= ec) & (ec <= 1))
    # MN exceeds alpha/2 somewhere on the null
    null = deltas[ok] <= -0.03
    assert np.any(mn[null] > 0.35)


def test_power_curve_inadmissible():
    with pytest.raises(DomainError):
        power_curve(TrialDesign(2, 2), 0.0, 0.05, 0.5, [0.8, 0.9])


def test_power_curve_empty_region_is_zero():
    pc = power_curve(TrialDesign(3, 3), 0.1, 0.0, 0.5, [-0.2, 0.0, 0.2], methods=("mn", "cz", "ec"))
    for m in pc.reject_prob:
        assert np.all(pc.reject_prob[m] == 0.0)


def test_maximal_size_empty_full_and_boundary():
    design = TrialDesign(4, 4)
    empty = _region(design, np.zeros(design.size))
    full = _region(design, np.ones(design.size))
    res = maximal_sizes([empty, full])
    assert res[0].value == 0.0
    assert res[1].value == pytest.approx(1.0, abs=1e-12)


def test_maximal_size_example_3_and_boundary_agreement():
    design = TrialDesign(18, 25)
    for method, expected in (("mn", 0.028), ("wald", 0.150)):
        res = maximal_size(design, 0.1, 0.05, method)
        assert abs(res.value - expected) <= 2e-3
    res = maximal_size(design, 0.1, 0.05, "ec")
    assert abs(res.value - res.boundary_value) <= 2e-3
    assert res.value <= 0.025 + 2e-3


def test_maximal_size_regions_must_share_design():
    with pytest.raises(DomainError):
        maximal_sizes([_region(TrialDesign(2, 2), np.zeros(9)), _region(TrialDesign(2, 3), np.zeros(12))])


def test_uniforms_deterministic_and_prefix_stable():
    a = uniforms(7, 100)
    np.testing.assert_array_equal(a, uniforms(7, 100))
    np.testing.assert_array_equal(a[:10], uniforms(7, 10))
    assert not np.array_equal(a, uniforms(8, 100))
    with pytest.raises(DomainError):
        uniforms(0, 0)


def test_binomial_inverse_distribution():
    u = uniforms(1, 200_000)[:, 0]
    x = binomial_inverse(10, 0.3, u)
    assert x.min() >= 0 and x.max() <= 10
    assert x.mean() == pytest.approx(3.0, abs=0.02)
    assert binomial_inverse(5, 0.0, u[:5]).tolist() == [0] * 5
    assert binomial_inverse(5, 1.0, u[:5]).tolist() == [5] * 5


def test_ec_expectation_single_draw():
    design = TrialDesign(10, 10)
    res = ec_expectation(design, 0.5, 0.3, 0.1, n_sims=1, seed=5)
    u = uniforms(5, 1)
    table = ObservedTable(int(binomial_inverse(10, 0.5, u[:, 0])[0]), int(binomial_inverse(10, 0.3, u[:, 1])[0]))
    assert res.n_sims == 1 and res.n_used == 1
    assert res.mean == pytest.approx(ec_correction(table, design, 0.1, 0.2), abs=1e-9)


def test_ec_expectation_deterministic():
    design = TrialDesign(12, 12)
    a = ec_expectation_grid(design, [(0.5, 0.5), (0.3, 0.7)], 0.1, n_sims=500, seed=3)
    b = ec_expectation_grid(design, [(0.5, 0.5), (0.3, 0.7)], 0.1, n_sims=500, seed=3)
    assert a == b


def test_ec_expectation_study_thread_independent():
    kw = dict(sizes=(10,), p_values=(0.3, 0.5), margins=(0.0, 0.1), n_sims=300, seed=11)
    assert ec_expectation_study(threads=1, **kw) == ec_expectation_study(threads=2, **kw)


def test_ec_expectation_rejects_bad_probability():
    with pytest.raises(DomainError):
        ec_expectation(TrialDesign(5, 5), 1.2, 0.5, 0.0, n_sims=10)
