"""Brute-force reference computations.

Nothing here uses a closed form or a shortcut shared with the production
routines; these are slow on purpose and serve as the independent side of
every cross-check (tests and ``noninf verify``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .core import ObservedTable, TrialDesign, admissible_range, check_table, grid
from .rmle import RestrictedEstimate

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class OracleReport:
    target: str
    max_abs_deviation: float
    cases: int


def constrained_loglik(p_t, x_t: int, x_c: int, n_t: int, n_c: int, d: float):
    p_t = np.asarray(p_t, float)
    p_c = np.clip(p_t - d, 0.0, 1.0)
    return (
        special.xlogy(x_t, p_t)
        + special.xlog1py(n_t - x_t, -p_t)
        + special.xlogy(x_c, p_c)
        + special.xlog1py(n_c - x_c, -p_c)
    )


def golden_max(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    """Golden-section search for a maximum of a scalar function on [lo, hi]."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    x = c if fc >= fd else d
    return x, max(fc, fd)


def oracle_rmle_point(x_t: int, x_c: int, n_t: int, n_c: int, d: float, step: float = 1e-5) -> float:
    lo, hi = admissible_range(d)
    if hi - lo <= 0:
        return lo
    pts = grid(lo, hi, step)
    ll = constrained_loglik(pts, x_t, x_c, n_t, n_c, d)
    k = int(np.argmax(ll))
    a, b = pts[max(k - 1, 0)], pts[min(k + 1, len(pts) - 1)]
    best, fbest = golden_max(lambda p: float(constrained_loglik(p, x_t, x_c, n_t, n_c, d)), a, b, 1e-9)
    return best if fbest >= ll[k] else float(pts[k])


def oracle_rmle(table: ObservedTable, design: TrialDesign, d: float) -> RestrictedEstimate:
    check_table(table, design)
    p = oracle_rmle_point(table.x_t, table.x_c, design.n_t, design.n_c, d)
    return RestrictedEstimate(p, min(max(p - d, 0.0), 1.0), float(d))


def oracle_sizes(regions, delta_step: float = 5e-4, pt_points: int = 2001) -> list[float]:
    """Rejection probability of each region maximised over a dense (delta, P_T) null grid.

    The defaults are four times finer than the operating-characteristics search and use
    no local refinement.  Regions need ``design``, ``delta0`` and a boolean ``mask`` and
    must share the design and margin.
    """
    if not regions:
        return []
    design, delta0 = regions[0].design, regions[0].delta0
    masks = np.stack([np.asarray(r.mask, dtype=float) for r in regions])
    k_t = np.arange(design.n_t + 1)
    k_c = np.arange(design.n_c + 1)
    best = np.zeros(len(regions))
    for d in grid(-1.0, -delta0, delta_step):
        lo, hi = admissible_range(float(d))
        pt = np.linspace(lo, hi, pt_points)
        pc = np.clip(pt - d, 0.0, 1.0)
        ft = stats.binom.pmf(k_t[None, :], design.n_t, pt[:, None])
        fc = stats.binom.pmf(k_c[None, :], design.n_c, pc[:, None])
        sizes = np.einsum("gi,kij,gj->kg", ft, masks, fc)
        best = np.maximum(best, sizes.max(axis=1))
    return [float(min(b, 1.0)) for b in best]


def oracle_size(region, delta_step: float = 5e-4, pt_points: int = 2001) -> float:
    """Dense-grid maximal size of a single region (see :func:`oracle_sizes`)."""
    if not np.asarray(region.mask).any():
        return 0.0
    return oracle_sizes([region], delta_step, pt_points)[0]


def oracle_tail_max(values, s_obs: float, design: TrialDesign, delta: float, pt_points: int = 20001) -> float:
    """max over a dense P_T grid of P(S >= s_obs - 1e-12), summing the joint pmf table by table.

    ``values`` is the statistic for every table in enumeration order.
    """
    inside = (np.asarray(values, float) >= s_obs - 1e-12).reshape(design.n_t + 1, design.n_c + 1)
    lo, hi = admissible_range(delta)
    pt = np.linspace(lo, hi, pt_points) if hi > lo else np.array([lo])
    ft = stats.binom.pmf(np.arange(design.n_t + 1)[None, :], design.n_t, pt[:, None])
    fc = stats.binom.pmf(np.arange(design.n_c + 1)[None, :], design.n_c, np.clip(pt - delta, 0, 1)[:, None])
    return float(min(np.max(np.sum((ft @ inside.astype(float)) * fc, axis=1)), 1.0))
