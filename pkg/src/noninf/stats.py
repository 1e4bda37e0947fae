"""Ordering statistics on the sample space and their asymptotic p-values."""

from __future__ import annotations

import enum

import numpy as np

from .core import (
    ObservedTable,
    TrialDesign,
    check_margin,
    check_table,
    grid,
    std_normal_cdf,
)
from .rmle import restricted_mle_arrays, sigma_hat_arrays

# Statistic values closer than this are tied.
TIE_TOL = 1e-12
# Absolute size below which a numerator is treated as exactly zero.
ZERO_NUM = 1e-15


class StatisticKind(str, enum.Enum):
    DELTA_PROJECTED = "delta_projected"
    WALD = "wald"


def _ratio(num, den):
    """num / den with 0/0 -> 0 and x/0 -> sign(x) * inf."""
    num = np.asarray(num, float)
    den = np.asarray(den, float)
    zero_den = den <= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / np.where(zero_den, 1.0, den)
    inf = np.where(np.abs(num) <= ZERO_NUM, 0.0, np.copysign(np.inf, num))
    return np.where(zero_den, inf, out)


def z_delta_arrays(x_t, x_c, n_t: int, n_c: int, delta: float):
    """Delta-projected Z-score (p_T - p_C + delta) / sigma_delta for arrays of counts.

    sigma_delta uses the restricted MLE under P_T - P_C = -delta.
    """
    x_t = np.asarray(x_t, float)
    x_c = np.asarray(x_c, float)
    p1, p2 = restricted_mle_arrays(x_t, x_c, n_t, n_c, -delta)
    num = x_t / n_t - x_c / n_c + delta
    return _ratio(num, sigma_hat_arrays(p1, p2, n_t, n_c))


def z_delta_all(design: TrialDesign, delta: float) -> np.ndarray:
    """Z_delta for every table in enumeration order."""
    xt, xc = design.grids()
    return z_delta_arrays(xt, xc, design.n_t, design.n_c, delta)


def z_delta(table: ObservedTable, design: TrialDesign, delta: float) -> float:
    check_table(table, design)
    return float(z_delta_arrays(table.x_t, table.x_c, design.n_t, design.n_c, delta))


def wald_z_arrays(x_t, x_c, n_t: int, n_c: int, delta0: float):
    pt = np.asarray(x_t, float) / n_t
    pc = np.asarray(x_c, float) / n_c
    se = np.sqrt(pt * (1 - pt) / n_t + pc * (1 - pc) / n_c)
    return _ratio(pt - pc + delta0, se)


def wald_z_all(design: TrialDesign, delta0: float) -> np.ndarray:
    xt, xc = design.grids()
    return wald_z_arrays(xt, xc, design.n_t, design.n_c, delta0)


def wald_z(table: ObservedTable, design: TrialDesign, delta0: float) -> float:
    check_table(table, design)
    check_margin(delta0)
    return float(wald_z_arrays(table.x_t, table.x_c, design.n_t, design.n_c, delta0))


def statistic_all(kind: StatisticKind, design: TrialDesign, delta0: float) -> np.ndarray:
    if StatisticKind(kind) is StatisticKind.WALD:
        return wald_z_all(design, delta0)
    return z_delta_all(design, delta0)


def p_asy(table: ObservedTable, design: TrialDesign, delta0: float) -> float:
    """1 - Phi(Z_{delta0}) (Miettinen-Nurminen one-sided p-value)."""
    check_margin(delta0)
    return float(std_normal_cdf(-z_delta(table, design, delta0)))


def p_wald(table: ObservedTable, design: TrialDesign, delta0: float) -> float:
    return float(std_normal_cdf(-wald_z(table, design, delta0)))


def p_asy_all(design: TrialDesign, delta0: float) -> np.ndarray:
    return std_normal_cdf(-z_delta_all(design, delta0))


def p_wald_all(design: TrialDesign, delta0: float) -> np.ndarray:
    return std_normal_cdf(-wald_z_all(design, delta0))


def barnard_violations(values: np.ndarray, design: TrialDesign) -> list[tuple[ObservedTable, ObservedTable]]:
    """Adjacent pairs breaking S(x_T, x_C) >= S(x_T, x_C + 1) or S(x_T, x_C) >= S(x_T - 1, x_C)."""
    s = np.asarray(values, float).reshape(design.n_t + 1, design.n_c + 1)
    bad = []
    for i in range(design.n_t + 1):
        for j in range(design.n_c + 1):
            if j < design.n_c and s[i, j] < s[i, j + 1] - TIE_TOL:
                bad.append((ObservedTable(i, j), ObservedTable(i, j + 1)))
            if i > 0 and s[i, j] < s[i - 1, j] - TIE_TOL:
                bad.append((ObservedTable(i, j), ObservedTable(i - 1, j)))
    return bad


def barnard_check(kind: StatisticKind, design: TrialDesign, delta0: float):
    """Exhaustive check of the Barnard criteria; an empty list means they hold."""
    return barnard_violations(statistic_all(kind, design, delta0), design)


def is_nondecreasing(values, tol: float = 1e-10) -> bool:
    v = np.asarray(values, float)
    if v.size < 2:
        return True
    a, b = v[:-1], v[1:]
    with np.errstate(invalid="ignore"):
        ok = (b >= a - tol) | (a == b)
    return bool(np.all(ok))


def z_delta_curve(table: ObservedTable, design: TrialDesign, deltas) -> np.ndarray:
    return np.array([z_delta(table, design, float(d)) for d in deltas])


def monotonicity_check(
    table: ObservedTable,
    design: TrialDesign,
    grid_step: float = 0.01,
    use_ec: bool = False,
    delta0: float = 0.0,
    lo: float = -1.0,
    hi: float = 1.0,
) -> bool:
    """True when Z_delta (or the exact-corrected score) is nondecreasing on a delta grid."""
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    check_table(table, design)
    deltas = grid(lo, hi, grid_step)
    if use_ec:
        from .intervals import z_ec_curve

        values = z_ec_curve(table, design, delta0, deltas)
    else:
        values = z_delta_curve(table, design, deltas)
    return is_nondecreasing(values)
