import numpy as np
import pytest

from noninf.core import ObservedTable, TrialDesign
from noninf.opchar import DecisionSet, critical_region, maximal_size
from noninf.oracle import (
    golden_max,
    oracle_rmle,
    oracle_rmle_point,
    oracle_size,
    oracle_tail_max,
)
from noninf.rmle import restricted_mle_arrays


def test_oracle_rmle_pooled():
    est = oracle_rmle(ObservedTable(3, 7), TrialDesign(10, 10), 0.0)
    assert est.p_t_tilde == pytest.approx(0.5, abs=1e-8)


def test_oracle_rmle_unit_difference():
    est = oracle_rmle(ObservedTable(2, 1), TrialDesign(4, 4), 1.0)
    assert (est.p_t_tilde, est.p_c_tilde) == (1.0, 0.0)


def test_oracle_rmle_agrees_with_closed_form():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        n_t, n_c = (int(v) for v in rng.integers(1, 50, size=2))
        x_t, x_c = int(rng.integers(0, n_t + 1)), int(rng.integers(0, n_c + 1))
        d = float(rng.uniform(-0.99, 0.99))
        closed = float(restricted_mle_arrays(x_t, x_c, n_t, n_c, d)[0])
        worst = max(worst, abs(closed - oracle_rmle_point(x_t, x_c, n_t, n_c, d)))
    assert worst < 1e-6


def test_golden_max_quadratic():
    x, fx = golden_max(lambda v: -(v - 0.3) ** 2, 0.0, 1.0, 1e-10)
    assert x == pytest.approx(0.3, abs=1e-8) and fx == pytest.approx(0.0, abs=1e-15)


def test_oracle_size_empty_and_full():
    design = TrialDesign(3, 3)
    empty = DecisionSet(design, "mn", 0.1, 0.05, np.zeros(16, bool), np.zeros(16))
    full = DecisionSet(design, "mn", 0.1, 0.05, np.ones(16, bool), np.zeros(16))
    assert oracle_size(empty) == 0.0
    assert oracle_size(full) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("method", ["wald", "mn", "ec"])
def test_oracle_size_example_2(method):
    design = TrialDesign(6, 6)
    region = critical_region(design, 0.12, 0.05, method)
    assert abs(oracle_size(region) - maximal_size(design, 0.12, 0.05, method).value) < 1e-3


def test_oracle_tail_max_full_tail():
    design = TrialDesign(3, 2)
    values = np.zeros(design.size)
    assert oracle_tail_max(values, 0.0, design, -0.1) == pytest.approx(1.0, abs=1e-12)
