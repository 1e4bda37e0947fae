"""Wald, Miettinen-Nurminen, Chan & Zhang and exact-corrected intervals for P_T - P_C."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .core import (
    DomainError,
    ObservedTable,
    TrialDesign,
    check_margin,
    check_table,
    grid,
    std_normal_quantile,
    upper_probit,
)
from .exact import (
    DELTA_STEP,
    P_GRID,
    _engine,
    delta_scan_grid,
    p_cz,
    p_exact,
    p_exact_all,
    refine_window,
)
from .rmle import restricted_mle_arrays, sigma_hat_arrays
from .stats import _ratio, is_nondecreasing, z_delta, z_delta_all

# Probabilities are floored here before taking a probit; only exact 0 or 1 reach it
# because complements are carried separately.
PROBIT_FLOOR = 1e-300
SCAN_STEP = 0.01
ROOT_TOL = 1e-10
CZ_ROOT_TOL = 1e-5


class DegenerateVarianceError(ArithmeticError):
    def __init__(self, table: ObservedTable, delta: float):
        super().__init__(f"sigma_hat is zero for {table} at delta={delta}")
        self.table = table
        self.delta = delta


@dataclass(frozen=True)
class Interval:
    lower: float
    upper: float
    level: float
    method: str
    monotone_ok: bool = True
    consistent: bool | None = None
    degenerate: bool = False
    seconds: float = field(default=0.0, compare=False)


def _sigma(table: ObservedTable, design: TrialDesign, delta: float) -> float:
    p1, p2 = restricted_mle_arrays(table.x_t, table.x_c, design.n_t, design.n_c, -delta)
    return float(sigma_hat_arrays(p1, p2, design.n_t, design.n_c))


def _numerator(table: ObservedTable, design: TrialDesign, delta: float) -> float:
    return table.x_t / design.n_t - table.x_c / design.n_c + delta


@dataclass(frozen=True)
class _Correction:
    """Pieces of EC_delta that do not depend on delta."""

    sigma0: float
    z0: float
    probit_exact: float
    p_exact: float

    @property
    def gap(self) -> float:
        return self.z0 - self.probit_exact


def _correction_parts(table: ObservedTable, design: TrialDesign, delta0: float, grid_points: int = P_GRID):
    delta0 = check_margin(delta0)
    res = p_exact(table, design, delta0, grid_points)
    p = min(max(res.value, PROBIT_FLOOR), 1.0)
    q = min(max(res.complement, PROBIT_FLOOR), 1.0)
    return _Correction(
        sigma0=_sigma(table, design, delta0),
        z0=z_delta(table, design, delta0),
        probit_exact=upper_probit(p, q),
        p_exact=res.value,
    )


def ec_correction(
    table: ObservedTable, design: TrialDesign, delta0: float, delta: float, _parts: _Correction | None = None
) -> float:
    """(sigma_{delta0} / sigma_delta) * (Z_{delta0} - Phi^{-1}(1 - p_exact)).

    Phi^{-1}(1 - p_asy) equals Z_{delta0} exactly, so the statistic is used directly.
    """
    check_table(table, design)
    parts = _parts or _correction_parts(table, design, delta0)
    if parts.sigma0 == 0.0:
        # 0/0 is read as 0, so a zero-variance margin carries no correction
        return 0.0
    if delta == delta0:
        return parts.gap
    s = _sigma(table, design, delta)
    if s == 0.0:
        raise DegenerateVarianceError(table, delta)
    return parts.sigma0 / s * parts.gap


def _z_ec(table, design, delta0, delta, parts: _Correction) -> float:
    if delta == delta0 and parts.sigma0 > 0.0:
        return parts.probit_exact
    num = _numerator(table, design, delta) - parts.sigma0 * parts.gap
    return float(_ratio(num, _sigma(table, design, delta)))


def z_ec(table: ObservedTable, design: TrialDesign, delta0: float, delta: float) -> float:
    """Exact-corrected score Z_delta - EC_delta; equals Phi^{-1}(1 - p_exact) at delta = delta0.

    Where sigma_delta is zero the value is the signed limit (+-inf, or 0 for 0/0).
    """
    check_table(table, design)
    return _z_ec(table, design, delta0, delta, _correction_parts(table, design, delta0))


def z_ec_curve(table: ObservedTable, design: TrialDesign, delta0: float, deltas) -> np.ndarray:
    """Z^EC over a delta grid; endpoints with zero variance take their signed limits."""
    parts = _correction_parts(table, design, delta0)
    return np.array([_z_ec(table, design, delta0, float(d), parts) for d in deltas])


def z_ec_all(design: TrialDesign, delta0: float, deltas, grid_points: int = P_GRID) -> np.ndarray:
    """Z^EC_delta for every table (columns, enumeration order) at each delta (rows)."""
    delta0 = check_margin(delta0)
    xt, xc = design.grids()
    exact, comp = p_exact_all(design, delta0, grid_points)
    p = np.clip(exact, PROBIT_FLOOR, 1.0)
    q = np.clip(comp, PROBIT_FLOOR, 1.0)
    probit = np.where(p <= 0.5, -ndtri(p), ndtri(q))
    s0 = sigma_hat_arrays(*restricted_mle_arrays(xt, xc, design.n_t, design.n_c, -delta0), design.n_t, design.n_c)
    gap = z_delta_all(design, delta0) - probit
    diff = xt / design.n_t - xc / design.n_c
    out = np.empty((len(deltas), design.size))
    for k, d in enumerate(np.asarray(deltas, float)):
        sd = sigma_hat_arrays(*restricted_mle_arrays(xt, xc, design.n_t, design.n_c, -d), design.n_t, design.n_c)
        out[k] = _ratio(diff + d - s0 * gap, sd)
        if d == delta0:
            out[k] = np.where(s0 > 0, probit, out[k])
    return out


# -- inversion of a score decreasing in the bound --------------------------------


def _bisect(pred, lo: float, hi: float, tol: float) -> float:
    """pred(lo) is True and pred(hi) False; returns the False end of the final bracket."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return hi


def _bisect_down(pred, lo: float, hi: float, tol: float) -> float:
    """pred(hi) is True and pred(lo) False; returns the False end of the final bracket."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return lo


def _invert_score(g, z_hi: float, z_lo: float, step: float = SCAN_STEP, tol: float = ROOT_TOL):
    """Bounds of {delta : z_lo <= g(delta) <= z_hi} for a score g meant to decrease in delta.

    The lower bound is the first delta (scanning up from -1) where g drops below z_hi
    and the upper bound the last delta where g exceeds z_lo, each refined by bisection.
    When g is not monotone this gives the outermost crossings.
    """
    deltas = grid(-1.0, 1.0, step)
    vals = np.array([g(float(d)) for d in deltas])
    monotone = is_nondecreasing(-vals)

    below = np.flatnonzero(vals < z_hi)
    if len(below) == 0:
        lower = 1.0
    elif below[0] == 0:
        lower = -1.0
    else:
        k = below[0]
        lower = _bisect(lambda d: g(d) >= z_hi, float(deltas[k - 1]), float(deltas[k]), tol)

    above = np.flatnonzero(vals > z_lo)
    if len(above) == 0:
        upper = -1.0
    elif above[-1] == len(deltas) - 1:
        upper = 1.0
    else:
        k = above[-1]
        upper = _bisect_down(lambda d: g(d) <= z_lo, float(deltas[k]), float(deltas[k + 1]), tol)
    return lower, upper, monotone


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def ci_mn(table: ObservedTable, design: TrialDesign, alpha: float = 0.05) -> Interval:
    """Miettinen-Nurminen interval: roots of Z_{-delta} = z_{1-alpha/2} and z_{alpha/2}."""
    t0 = time.perf_counter()
    alpha = _check_alpha(alpha)
    check_table(table, design)
    z = -std_normal_quantile(alpha / 2)
    lower, upper, mono = _invert_score(lambda d: z_delta(table, design, -d), z, -z)
    return Interval(lower, upper, 1 - alpha, "mn", mono, seconds=time.perf_counter() - t0)


def ci_wald(table: ObservedTable, design: TrialDesign, alpha: float = 0.05) -> Interval:
    t0 = time.perf_counter()
    alpha = _check_alpha(alpha)
    check_table(table, design)
    pt = table.x_t / design.n_t
    pc = table.x_c / design.n_c
    half = -std_normal_quantile(alpha / 2) * math.sqrt(pt * (1 - pt) / design.n_t + pc * (1 - pc) / design.n_c)
    diff = pt - pc
    return Interval(
        max(diff - half, -1.0), min(diff + half, 1.0), 1 - alpha, "wald", seconds=time.perf_counter() - t0
    )


def ci_ec(
    table: ObservedTable, design: TrialDesign, delta0: float, alpha: float = 0.05, grid_points: int = P_GRID
) -> Interval:
    """Exact-corrected interval: inversion of Z^EC_{-delta} at z_{1-alpha/2} and z_{alpha/2}."""
    t0 = time.perf_counter()
    alpha = _check_alpha(alpha)
    check_table(table, design)
    delta0 = check_margin(delta0)
    parts = _correction_parts(table, design, delta0, grid_points)
    reject = parts.p_exact <= alpha / 2
    if parts.sigma0 == 0.0:
        lower, upper = -1.0, 1.0
        return Interval(
            lower, upper, 1 - alpha, "ec", True, (lower > -delta0) == reject, True, time.perf_counter() - t0
        )
    z = -std_normal_quantile(alpha / 2)
    lower, upper, mono = _invert_score(lambda d: _z_ec(table, design, delta0, -d, parts), z, -z)
    return Interval(lower, upper, 1 - alpha, "ec", mono, (lower > -delta0) == reject, False, time.perf_counter() - t0)


# -- Chan & Zhang --------------------------------------------------------------


def _pl_value(design, delta, targets, orientation, grid_points, refine):
    engine = _engine(design, float(delta), orientation)
    return np.minimum(engine.maximize(targets, grid_points, refine)[0], 1.0)


def cz_scan(
    design: TrialDesign,
    alpha: float,
    targets=None,
    orientation: str = "upper",
    step: float = DELTA_STEP,
    grid_points: int = P_GRID,
):
    """First scan index where P_{L,delta} (scanning up) or P_{U,delta} (scanning down) exceeds alpha/2.

    Returns ``(deltas, index)``; ``index`` is -1 for targets that never exceed.
    Refined values are computed only where the coarse value is within the refinement
    window below the threshold.
    """
    targets = np.arange(design.size) if targets is None else np.asarray(targets, dtype=np.int64)
    deltas = delta_scan_grid(step)
    order = range(len(deltas)) if orientation == "upper" else range(len(deltas) - 1, -1, -1)
    level = alpha / 2
    window = refine_window(design, grid_points)
    found = np.full(len(targets), -1, dtype=np.int64)
    for k in order:
        open_ = np.flatnonzero(found < 0)
        if len(open_) == 0:
            break
        coarse = _pl_value(design, deltas[k], targets[open_], orientation, grid_points, False)
        hit = coarse > level
        near = ~hit & (coarse > level - window)
        if near.any():
            refined = _pl_value(design, deltas[k], targets[open_[near]], orientation, grid_points, True)
            hit[np.flatnonzero(near)[refined > level]] = True
        found[open_[hit]] = k
    return deltas, found


def _cz_bound(table, design, alpha, orientation, deltas, k, grid_points) -> float:
    idx = np.array([design.index(table)])
    level = alpha / 2

    def pred(d):
        return _pl_value(design, d, idx, orientation, grid_points, True)[0] > level

    if orientation == "upper":
        if k < 0:
            return 1.0
        if k == 0:
            return -1.0
        return _cz_refine_up(pred, float(deltas[k - 1]), float(deltas[k]))
    if k < 0:
        return -1.0
    if k == len(deltas) - 1:
        return 1.0
    return _cz_refine_down(pred, float(deltas[k]), float(deltas[k + 1]))


def _cz_refine_up(pred, lo: float, hi: float) -> float:
    """pred(lo) False, pred(hi) True: locate the transition, returning the True end."""
    while hi - lo > CZ_ROOT_TOL:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _cz_refine_down(pred, lo: float, hi: float) -> float:
    """pred(lo) True, pred(hi) False: locate the transition, returning the True end."""
    while hi - lo > CZ_ROOT_TOL:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return lo


def ci_cz(
    table: ObservedTable,
    design: TrialDesign,
    alpha: float = 0.05,
    delta0: float | None = None,
    step: float = DELTA_STEP,
    grid_points: int = P_GRID,
) -> Interval:
    """Chan & Zhang interval: inf{delta : P_L > alpha/2} and sup{delta : P_U > alpha/2}.

    With ``delta0`` the Chan & Zhang p-value is also computed and the consistency bit
    (lower > -delta0 iff p_cz <= alpha/2) is filled in.
    """
    t0 = time.perf_counter()
    alpha = _check_alpha(alpha)
    idx = np.array([design.index(table)])
    deltas, kl = cz_scan(design, alpha, idx, "upper", step, grid_points)
    lower = _cz_bound(table, design, alpha, "upper", deltas, int(kl[0]), grid_points)
    deltas, ku = cz_scan(design, alpha, idx, "lower", step, grid_points)
    upper = _cz_bound(table, design, alpha, "lower", deltas, int(ku[0]), grid_points)
    consistent = None
    if delta0 is not None:
        pv = p_cz(table, design, delta0, step, grid_points).value
        consistent = (lower > -check_margin(delta0)) == (pv <= alpha / 2)
    return Interval(lower, upper, 1 - alpha, "cz", True, consistent, seconds=time.perf_counter() - t0)


def cz_lower_all(design: TrialDesign, alpha: float, step: float = DELTA_STEP, grid_points: int = P_GRID) -> np.ndarray:
    """Chan & Zhang lower bounds for every table of a design."""
    alpha = _check_alpha(alpha)
    deltas, found = cz_scan(design, alpha, None, "upper", step, grid_points)
    tables = [ObservedTable(i, j) for i in range(design.n_t + 1) for j in range(design.n_c + 1)]
    return np.array(
        [_cz_bound(t, design, alpha, "upper", deltas, int(k), grid_points) for t, k in zip(tables, found)]
    )


def ci_all(
    table: ObservedTable, design: TrialDesign, alpha: float = 0.05, delta0: float = 0.0, methods=("wald", "mn", "cz", "ec")
) -> dict[str, Interval]:
    out = {}
    for m in methods:
        if m == "wald":
            out[m] = ci_wald(table, design, alpha)
        elif m == "mn":
            out[m] = ci_mn(table, design, alpha)
        elif m == "cz":
            out[m] = ci_cz(table, design, alpha, delta0)
        elif m == "ec":
            out[m] = ci_ec(table, design, delta0, alpha)
        else:
            raise ValueError(f"unknown method {m!r}")
    return out
