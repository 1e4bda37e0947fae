"""Exact unconditional tail probabilities maximised over the nuisance parameter.

All p-values here are suprema of binomial tail sums over P_T (and, for the
Chan & Zhang p-value, over the difference delta as well).  The search is a
coarse grid followed by golden-section refinement around the best cells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .core import (
    NullPoint,
    ObservedTable,
    TrialDesign,
    admissible_range,
    binom_pmf_matrix,
    check_margin,
    check_point,
    check_table,
)
from .oracle import GOLDEN
from .stats import TIE_TOL, StatisticKind, statistic_all, z_delta_all

P_GRID = 1001
DELTA_STEP = 1e-3
REFINE_TOL = 1e-8
LOCAL_MAX_WINDOW = 1e-6
MAX_CANDIDATES = 4


@dataclass(frozen=True)
class MaximizationResult:
    value: float
    argmax_p_t: float
    grid_points: int
    refined: bool
    # 1 - value, summed directly over the complement so it keeps relative precision
    complement: float
    delta: float


def _cum_with_zero(pmf: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(F, G) with F[..., k] = P(X < k) and G[..., k] = P(X >= k), k = 0..n+1."""
    z = np.zeros(pmf.shape[:-1] + (1,))
    below = np.concatenate([z, np.cumsum(pmf, axis=-1)], axis=-1)
    above = np.concatenate([np.cumsum(pmf[..., ::-1], axis=-1)[..., ::-1], z], axis=-1)
    return below, above


class TailEngine:
    """Upper-tail sums of a fixed statistic at data-generating difference ``delta``.

    ``values`` holds the statistic for every table in enumeration order, oriented
    so that larger is more extreme.  Tail membership {S >= s_obs - TIE_TOL} does not
    depend on P_T, so it is computed once and reused for every P_T evaluated.
    """

    def __init__(self, design: TrialDesign, values: np.ndarray, delta: float):
        self.design = design
        self.delta = float(delta)
        self.lo, self.hi = admissible_range(self.delta)
        self.values = np.asarray(values, float)
        self.order = np.argsort(-self.values, kind="stable")
        neg_sorted = -self.values[self.order]
        # tail size of each table: #{j : S_j >= S_i - TIE_TOL}
        self.tail_count = np.searchsorted(neg_sorted, -(self.values - TIE_TOL), side="right")
        s = self.values.reshape(design.n_t + 1, design.n_c + 1)
        with np.errstate(invalid="ignore"):
            self.prefix_rows = bool(np.all(s[:, 1:] <= s[:, :-1]))
            self.suffix_rows = bool(np.all(s[:, 1:] >= s[:, :-1]))
        self._rows = s
        xt, xc = design.grids()
        self._sorted_xy = (xt[self.order], xc[self.order])

    # -- membership ---------------------------------------------------------
    def _row_counts(self, targets: np.ndarray) -> np.ndarray:
        """Per target and per x_T row, the number of x_C in the tail."""
        thr = self.values[targets] - TIE_TOL
        out = np.empty((len(targets), self.design.n_t + 1), dtype=np.int64)
        for i, row in enumerate(self._rows):
            if self.prefix_rows:
                out[:, i] = np.searchsorted(-row, -thr, side="right")
            else:
                out[:, i] = row.size - np.searchsorted(row, thr, side="left")
        return out

    def _use_rows(self, n_targets: int) -> bool:
        if not (self.prefix_rows or self.suffix_rows):
            return False
        return n_targets * (self.design.n_t + 1) <= 2 * self.design.size

    # -- evaluation -----------------------------------------------------------
    def _eval_rows(self, counts: np.ndarray, p_t: np.ndarray):
        """Tail and complement for targets (rows of ``counts``) at matching P_T values.

        ``p_t`` has shape (..., T); returns arrays of the same shape.
        """
        pt = binom_pmf_matrix(self.design.n_t, p_t)  # (..., T, n_t+1)
        pc = binom_pmf_matrix(self.design.n_c, p_t - self.delta)  # (..., T, n_c+1)
        below, above = _cum_with_zero(pc)
        n1 = self.design.n_c + 1
        if self.prefix_rows:
            tail_idx, comp_idx = counts, counts
            tail_c = np.take_along_axis(below, np.broadcast_to(tail_idx, below.shape[:-1] + (tail_idx.shape[-1],)), -1)
            comp_c = np.take_along_axis(above, np.broadcast_to(comp_idx, above.shape[:-1] + (comp_idx.shape[-1],)), -1)
        else:
            start = n1 - counts
            tail_c = np.take_along_axis(above, np.broadcast_to(start, above.shape[:-1] + (start.shape[-1],)), -1)
            comp_c = np.take_along_axis(below, np.broadcast_to(start, below.shape[:-1] + (start.shape[-1],)), -1)
        return (pt * tail_c).sum(-1), (pt * comp_c).sum(-1)

    def _eval_rows_grid(self, counts: np.ndarray, p_grid: np.ndarray):
        """Row-threshold evaluation on a grid shared by all targets; returns (G, T) arrays."""
        pt = binom_pmf_matrix(self.design.n_t, p_grid)  # (G, n_t+1)
        below, above = _cum_with_zero(binom_pmf_matrix(self.design.n_c, p_grid - self.delta))
        if self.prefix_rows:
            tail_src, comp_src, idx = below, above, counts
        else:
            tail_src, comp_src, idx = above, below, self.design.n_c + 1 - counts
        tails = np.einsum("gx,gtx->gt", pt, tail_src[:, idx])
        comps = np.einsum("gx,gtx->gt", pt, comp_src[:, idx])
        return tails, comps

    def _eval_sorted(self, targets: np.ndarray, p_t: np.ndarray, precise: bool = True):
        """Tail and complement via cumulative sums in statistic order; ``p_t`` is (G,)."""
        pt = binom_pmf_matrix(self.design.n_t, p_t)
        pc = binom_pmf_matrix(self.design.n_c, p_t - self.delta)
        xt, xc = self._sorted_xy
        joint = pt[:, xt] * pc[:, xc]
        k = self.tail_count[targets]
        if precise:
            up = np.cumsum(joint[:, ::-1], axis=1)[:, ::-1]
            comps = np.where(k < joint.shape[1], up[:, np.minimum(k, joint.shape[1] - 1)], 0.0)
        np.cumsum(joint, axis=1, out=joint)
        tails = joint[:, k - 1]
        if not precise:
            comps = joint[:, -1:] - tails
        return tails, comps

    def evaluate_grid(self, targets: np.ndarray, p_grid: np.ndarray, precise: bool = True):
        """Tail and complement arrays of shape (G, T) on a common P_T grid."""
        targets = np.asarray(targets, dtype=np.int64)
        if self._use_rows(len(targets)):
            return self._eval_rows_grid(self._row_counts(targets), p_grid)
        chunk = max(1, 2_000_000 // self.design.size)
        tails = np.empty((len(p_grid), len(targets)))
        comps = np.empty_like(tails)
        for s in range(0, len(p_grid), chunk):
            tails[s : s + chunk], comps[s : s + chunk] = self._eval_sorted(targets, p_grid[s : s + chunk], precise)
        return tails, comps

    def evaluate_at(self, targets: np.ndarray, p_t: np.ndarray):
        """Tail and complement for each target at its own P_T value."""
        targets = np.asarray(targets, dtype=np.int64)
        p_t = np.asarray(p_t, float)
        if self.prefix_rows or self.suffix_rows:
            return self._eval_rows(self._row_counts(targets), p_t)
        # generic membership masks
        tails = np.empty(len(targets))
        comps = np.empty(len(targets))
        rank = np.empty(self.design.size, dtype=np.int64)
        rank[self.order] = np.arange(self.design.size)
        for s in range(0, len(targets), 256):
            t = targets[s : s + 256]
            joint = (
                binom_pmf_matrix(self.design.n_t, p_t[s : s + 256])[:, :, None]
                * binom_pmf_matrix(self.design.n_c, p_t[s : s + 256] - self.delta)[:, None, :]
            ).reshape(len(t), -1)
            inside = rank[None, :] < self.tail_count[t][:, None]
            tails[s : s + 256] = np.where(inside, joint, 0.0).sum(1)
            comps[s : s + 256] = np.where(inside, 0.0, joint).sum(1)
        return tails, comps

    # -- maximisation ---------------------------------------------------------
    def maximize(self, targets, grid_points: int = P_GRID, refine: bool = True, precise: bool = True):
        """Supremum over admissible P_T of the tail probability for each target.

        Returns ``(value, complement, argmax)`` arrays.  When the tail is close to 1
        the search minimises the complement instead, so tiny complements stay exact.
        """
        targets = np.atleast_1d(np.asarray(targets, dtype=np.int64))
        if self.hi - self.lo <= 0:
            p = np.full(len(targets), self.lo)
            t, c = self.evaluate_at(targets, p)
            return t, c, p
        p_grid = np.linspace(self.lo, self.hi, grid_points)
        tails, comps = self.evaluate_grid(targets, p_grid, precise)
        use_comp = tails.max(axis=0) > 0.5
        obj = np.where(use_comp[None, :], -comps, tails)
        best = np.argmax(obj, axis=0)
        cols = np.arange(len(targets))
        value = tails[best, cols].copy()
        comp = comps[best, cols].copy()
        arg = p_grid[best].copy()
        if not refine:
            return value, comp, arg

        # candidate cells: left edges of local maxima within the window of the best
        fbest = obj[best, cols]
        left = np.vstack([np.full((1, len(targets)), -np.inf), obj[:-1]])
        right = np.vstack([obj[1:], np.full((1, len(targets)), -np.inf)])
        is_max = (obj > left) & (obj >= right) & (obj >= fbest[None, :] - LOCAL_MAX_WINDOW)
        is_max[best, cols] = True
        gi, ti = np.nonzero(is_max)
        if len(gi) == 0:
            return value, comp, arg
        # keep at most MAX_CANDIDATES per target, best first
        keep = np.lexsort((-obj[gi, ti], ti))
        gi, ti = gi[keep], ti[keep]
        first = np.r_[0, np.flatnonzero(np.diff(ti)) + 1]
        rank = np.arange(len(ti)) - np.repeat(first, np.diff(np.r_[first, len(ti)]))
        sel = rank < MAX_CANDIDATES
        gi, ti = gi[sel], ti[sel]

        a = p_grid[np.maximum(gi - 1, 0)]
        b = p_grid[np.minimum(gi + 1, grid_points - 1)]
        tgt = targets[ti]
        uc = use_comp[ti]

        def f(p):
            t, c = self.evaluate_at(tgt, p)
            return np.where(uc, -c, t), t, c

        x, ft, tt, cc = _golden_vec(f, a, b, REFINE_TOL)
        better = ft > obj[best, cols][ti]
        for k in np.flatnonzero(better):
            j = ti[k]
            cur = -comp[j] if uc[k] else value[j]
            if ft[k] > cur:
                value[j], comp[j], arg[j] = tt[k], cc[k], x[k]
        return value, comp, arg


def _golden_vec(f, a: np.ndarray, b: np.ndarray, tol: float):
    """Vectorised golden-section maximisation.

    ``f`` maps an array of points to ``(objective, tail, complement)`` arrays.
    """
    a = np.asarray(a, float).copy()
    b = np.asarray(b, float).copy()
    width = float(np.max(b - a)) if a.size else 0.0
    n_iter = max(1, int(math.ceil(math.log(max(width, tol) / tol) / -math.log(GOLDEN))))
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, tc, qc = f(c)
    fd, td, qd = f(d)
    for _ in range(n_iter):
        left = fc >= fd
        a, b = np.where(left, a, c), np.where(left, d, b)
        c, d = np.where(left, b - GOLDEN * (b - a), d), np.where(left, c, a + GOLDEN * (b - a))
        fn, tn, qn = f(np.where(left, c, d))
        fc, fd = np.where(left, fn, fd), np.where(left, fc, fn)
        tc, td = np.where(left, tn, td), np.where(left, tc, tn)
        qc, qd = np.where(left, qn, qd), np.where(left, qc, qn)
    pick = fc >= fd
    return np.where(pick, c, d), np.where(pick, fc, fd), np.where(pick, tc, td), np.where(pick, qc, qd)


def _engine(design: TrialDesign, delta: float, orientation: str = "upper") -> TailEngine:
    """Engine for P_{L,delta} (upper) or P_{U,delta} (lower): statistic Z_{-delta}, data at delta."""
    s = z_delta_all(design, -delta)
    if orientation == "lower":
        s = -s
    elif orientation != "upper":
        raise ValueError(f"orientation must be 'upper' or 'lower', got {orientation!r}")
    return TailEngine(design, s, delta)


def tail_prob(
    design: TrialDesign,
    delta_eval: float,
    p_t: float,
    s_obs: float,
    kind: StatisticKind = StatisticKind.DELTA_PROJECTED,
    delta0: float = 0.0,
    orientation: str = "upper",
    projection: float | None = None,
) -> float:
    """P(S >= s_obs) (upper) or P(S <= s_obs) (lower) at the point (p_t, delta_eval).

    ``S`` is Z_{projection} (default ``delta0``) for the delta-projected kind and the
    Wald Z with margin ``delta0`` otherwise.  Ties within TIE_TOL count as in the tail.
    """
    check_point(NullPoint(p_t, delta_eval))
    if StatisticKind(kind) is StatisticKind.WALD:
        s = statistic_all(kind, design, delta0)
    else:
        s = z_delta_all(design, delta0 if projection is None else projection)
    pmf = (
        binom_pmf_matrix(design.n_t, p_t)[:, None] * binom_pmf_matrix(design.n_c, p_t - delta_eval)[None, :]
    ).ravel()
    if orientation == "upper":
        inside = s >= s_obs - TIE_TOL
    elif orientation == "lower":
        inside = s <= s_obs + TIE_TOL
    else:
        raise ValueError(f"orientation must be 'upper' or 'lower', got {orientation!r}")
    return float(min(pmf[inside].sum(), 1.0))


def _result(engine: TailEngine, idx: int, grid_points: int, refine: bool) -> MaximizationResult:
    v, c, a = engine.maximize([idx], grid_points, refine)
    return MaximizationResult(
        value=float(min(v[0], 1.0)),
        argmax_p_t=float(a[0]),
        grid_points=grid_points if engine.hi > engine.lo else 1,
        refined=refine and engine.hi > engine.lo,
        complement=float(max(c[0], 0.0)),
        delta=engine.delta,
    )


def p_l(
    table: ObservedTable, design: TrialDesign, delta: float, grid_points: int = P_GRID, refine: bool = True
) -> MaximizationResult:
    """max over admissible P_T of P(Z_{-delta} >= observed) with data generated at ``delta``."""
    return _result(_engine(design, delta, "upper"), design.index(table), grid_points, refine)


def p_u(
    table: ObservedTable, design: TrialDesign, delta: float, grid_points: int = P_GRID, refine: bool = True
) -> MaximizationResult:
    """As :func:`p_l` with the lower tail P(Z_{-delta} <= observed)."""
    return _result(_engine(design, delta, "lower"), design.index(table), grid_points, refine)


def p_exact(table: ObservedTable, design: TrialDesign, delta0: float, grid_points: int = P_GRID) -> MaximizationResult:
    """Chan's exact unconditional p-value with the Z_{delta0} ordering, maximised on delta = -delta0."""
    return p_l(table, design, -check_margin(delta0), grid_points)


def p_l_all(design: TrialDesign, delta: float, orientation: str = "upper", grid_points: int = P_GRID, refine=True):
    """P_{L,delta} (or P_{U,delta}) for every table; returns (values, complements, argmax) arrays."""
    engine = _engine(design, delta, orientation)
    v, c, a = engine.maximize(np.arange(design.size), grid_points, refine)
    return np.minimum(v, 1.0), np.maximum(c, 0.0), a


def p_exact_all(design: TrialDesign, delta0: float, grid_points: int = P_GRID, tables=None):
    """Exact p-values (and complements) for all tables, or for the flat indices in ``tables``."""
    engine = _engine(design, -check_margin(delta0), "upper")
    if tables is None:
        v, c, _ = engine.maximize(np.arange(design.size), grid_points, True)
        return np.minimum(v, 1.0), np.maximum(c, 0.0)
    tables = np.asarray(tables, dtype=np.int64)
    v, c, _ = engine.maximize(tables, grid_points, True)
    return np.minimum(v, 1.0), np.maximum(c, 0.0)


def delta_scan_grid(step: float = DELTA_STEP) -> np.ndarray:
    """Points -1 + k * step over [-1, 1], rounded so every caller sees identical floats."""
    n = int(round(2.0 / step))
    return np.round(-1.0 + np.arange(n + 1) * step, 12)


def cz_delta_grid(delta0: float, step: float = DELTA_STEP) -> np.ndarray:
    """Scan points in [-1, -delta0]; the endpoint -delta0 is always included."""
    delta0 = check_margin(delta0)
    g = delta_scan_grid(step)
    g = g[g < -delta0 - 1e-12]
    return np.r_[g, -delta0]


def p_l_landscape(design: TrialDesign, deltas, targets=None, orientation: str = "upper", grid_points: int = P_GRID):
    """Unrefined P_{L,delta} (or P_{U,delta}) over a delta grid; shape (len(deltas), T)."""
    targets = np.arange(design.size) if targets is None else np.asarray(targets, dtype=np.int64)
    out = np.empty((len(deltas), len(targets)))
    for k, d in enumerate(deltas):
        engine = _engine(design, float(d), orientation)
        out[k] = engine.maximize(targets, grid_points, refine=False, precise=False)[0]
    return np.minimum(out, 1.0)


def refine_window(design: TrialDesign, grid_points: int = P_GRID) -> float:
    """Bound on how much P_T refinement can raise a coarse grid maximum.

    Observed gains are ~1e-5 for n_t + n_c near 70 with 1001 points and scale with
    (n / grid spacing)^2; the bound keeps a tenfold margin.
    """
    n = design.n_t + design.n_c
    return max(1e-4, 1e-4 * (n / 50.0) ** 2 * (1000.0 / (grid_points - 1)) ** 2)


def _refined_grid_max(design, deltas, land, targets, grid_points, orientation="upper"):
    """max over the delta grid of refined P_{L,delta}, pruned with the coarse landscape.

    ``land`` is (K, T) coarse values for ``targets``.  Returns (values, argmax delta).
    """
    top = land.max(axis=0)
    values = top.copy()
    arg = deltas[np.argmax(land, axis=0)].astype(float)
    need = land >= top[None, :] - refine_window(design, grid_points)
    # a coarse maximum of 1 cannot be raised by refinement
    need[:, top >= 1.0 - 1e-12] = False
    for k in np.flatnonzero(need.any(axis=1)):
        cols = np.flatnonzero(need[k])
        engine = _engine(design, float(deltas[k]), orientation)
        v = np.minimum(engine.maximize(targets[cols], grid_points, refine=True)[0], 1.0)
        better = v > values[cols]
        values[cols[better]] = v[better]
        arg[cols[better]] = deltas[k]
    return values, arg


@dataclass(frozen=True)
class CZResult:
    value: float
    argmax_delta: float
    p_exact: float


def p_cz(
    table: ObservedTable, design: TrialDesign, delta0: float, step: float = DELTA_STEP, grid_points: int = P_GRID
) -> CZResult:
    """Chan & Zhang p-value: max over the delta grid on [-1, -delta0] of P_{L,delta}.

    The delta search is a plain grid scan (P_T is still refined at every grid point);
    P_{L,delta} jumps where the ordering changes, so a local search between grid points
    would chase discontinuities rather than smooth maxima.
    """
    delta0 = check_margin(delta0)
    idx = np.array([design.index(table)])
    deltas = cz_delta_grid(delta0, step)
    land = p_l_landscape(design, deltas, idx, grid_points=grid_points)
    values, arg = _refined_grid_max(design, deltas, land, idx, grid_points)
    exact = p_l(table, design, -delta0, grid_points).value
    value = max(float(values[0]), exact)
    return CZResult(value, float(arg[0]) if value > exact else -delta0, exact)


def p_cz_all(
    design: TrialDesign,
    delta0: float,
    step: float = DELTA_STEP,
    grid_points: int = P_GRID,
    targets=None,
):
    """Chan & Zhang p-values for every table (or the flat indices ``targets``).

    Returns ``(p_cz, p_exact)`` arrays.
    """
    delta0 = check_margin(delta0)
    deltas = cz_delta_grid(delta0, step)
    targets = np.arange(design.size) if targets is None else np.asarray(targets, dtype=np.int64)
    if len(targets) == 0:
        return np.empty(0), np.empty(0)
    land = p_l_landscape(design, deltas, targets, grid_points=grid_points)
    values, _ = _refined_grid_max(design, deltas, land, targets, grid_points)
    exact, _ = p_exact_all(design, delta0, grid_points, targets)
    return np.maximum(values, exact), exact


def fisher_exact(table: ObservedTable, design: TrialDesign, alternative: str = "two-sided") -> float:
    """Fisher's conditional (hypergeometric) p-value for the 2x2 table.

    ``alternative="greater"`` gives the one-sided value favouring the treatment arm.
    """
    check_table(table, design)
    res = sps.fisher_exact(
        [[table.x_t, design.n_t - table.x_t], [table.x_c, design.n_c - table.x_c]], alternative=alternative
    )
    return float(min(res.pvalue, 1.0))
