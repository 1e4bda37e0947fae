"""Operating characteristics: critical regions, size, power and the expected correction term."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import (
    DomainError,
    NullPoint,
    TrialDesign,
    admissible_range,
    binom_pmf_matrix,
    check_margin,
    check_point,
    grid,
)
from .exact import (
    DELTA_STEP,
    P_GRID,
    _refined_grid_max,
    cz_delta_grid,
    p_exact_all,
    p_l_landscape,
)
from .oracle import golden_max
from .rmle import restricted_mle_arrays, sigma_hat_arrays
from .stats import p_asy_all, p_wald_all, z_delta_all

METHODS = ("wald", "mn", "cz", "ec")
SIZE_DELTA_STEP = 2e-3
SIZE_PT_POINTS = 501
SIZE_REFINE_TOL = 1e-9
SIZE_STARTS = 8
PROBIT_FLOOR = 1e-300


@dataclass(frozen=True)
class DecisionSet:
    """Per-table reject decisions (enumeration order) of one method at one (margin, alpha).

    ``pvalues`` holds the method's p-value where it was computed; for ``cz`` tables whose
    exact p-value already exceeds alpha/2 it is NaN, since p_cz >= p_exact decides them.
    """

    design: TrialDesign
    method: str
    delta0: float
    alpha: float
    rejected: np.ndarray
    pvalues: np.ndarray

    @property
    def mask(self) -> np.ndarray:
        return self.rejected.reshape(self.design.n_t + 1, self.design.n_c + 1)

    @property
    def count(self) -> int:
        return int(self.rejected.sum())


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    return alpha


def critical_region(
    design: TrialDesign,
    delta0: float,
    alpha: float,
    method: str,
    grid_points: int = P_GRID,
    delta_step: float = DELTA_STEP,
) -> DecisionSet:
    """Tables whose ``method`` p-value is at most alpha/2."""
    delta0 = check_margin(delta0)
    alpha = _check_alpha(alpha)
    level = alpha / 2
    if method == "wald":
        p = p_wald_all(design, delta0)
    elif method == "mn":
        p = p_asy_all(design, delta0)
    elif method == "ec":
        p, _ = p_exact_all(design, delta0, grid_points)
    elif method == "cz":
        p, _ = p_exact_all(design, delta0, grid_points)
        cand = np.flatnonzero(p <= level)
        p = np.full(design.size, np.nan)
        p[cand] = _cz_values(design, delta0, level, cand, grid_points, delta_step)
        return DecisionSet(design, method, delta0, alpha, np.nan_to_num(p, nan=np.inf) <= level, p)
    else:
        raise DomainError(f"unknown method {method!r}; expected one of {METHODS}")
    return DecisionSet(design, method, delta0, alpha, p <= level, p)


def _cz_values(design, delta0, level, targets, grid_points, delta_step):
    """p_cz for ``targets``; tables whose coarse maximum already exceeds ``level`` skip refinement."""
    out = np.empty(len(targets))
    if len(targets) == 0:
        return out
    deltas = cz_delta_grid(delta0, delta_step)
    land = p_l_landscape(design, deltas, targets, grid_points=grid_points)
    top = land.max(axis=0)
    out[:] = top
    todo = np.flatnonzero(top <= level)
    if len(todo):
        vals, _ = _refined_grid_max(design, deltas, land[:, todo], targets[todo], grid_points)
        exact, _ = p_exact_all(design, delta0, grid_points, targets[todo])
        out[todo] = np.maximum(vals, exact)
    return out


def all_regions(design, delta0, alpha, methods=METHODS, grid_points: int = P_GRID) -> dict[str, DecisionSet]:
    return {m: critical_region(design, delta0, alpha, m, grid_points) for m in methods}


# -- size ----------------------------------------------------------------------


def _sizes_at(masks: np.ndarray, design: TrialDesign, p_t: np.ndarray, p_c: np.ndarray) -> np.ndarray:
    """Rejection probability of each (K, n_t+1, n_c+1) mask at the points (p_t, p_c); shape (K, M)."""
    ft = binom_pmf_matrix(design.n_t, p_t)
    fc = binom_pmf_matrix(design.n_c, p_c)
    return np.einsum("mi,kij,mj->km", ft, masks.astype(float), fc)


def conditional_size(region: DecisionSet, point: NullPoint) -> float:
    """Probability of landing in the region when data are generated at ``point``."""
    check_point(point)
    v = _sizes_at(region.mask[None], region.design, np.array([point.p_t]), np.array([point.p_c]))
    return float(min(v[0, 0], 1.0))


@dataclass(frozen=True)
class SizeResult:
    value: float
    p_t: float
    delta: float
    boundary_value: float
    boundary_p_t: float
    delta_step: float
    pt_points: int


def _pt_grid(delta: float, points: int) -> np.ndarray:
    lo, hi = admissible_range(delta)
    return np.linspace(lo, hi, points) if hi > lo else np.array([lo])


def _grid_maxima(masks, design, deltas, pt_points):
    """Per delta row: max size and its P_T, for each mask.  Returns (K, D) values and P_T."""
    k = masks.shape[0]
    best = np.zeros((k, len(deltas)))
    arg = np.zeros((k, len(deltas)))
    m = masks.astype(float)
    for i, d in enumerate(deltas):
        pt = _pt_grid(float(d), pt_points)
        ft = binom_pmf_matrix(design.n_t, pt)
        fc = binom_pmf_matrix(design.n_c, np.clip(pt - d, 0.0, 1.0))
        s = np.einsum("mi,kij,mj->km", ft, m, fc, optimize=True)
        j = np.argmax(s, axis=1)
        best[:, i] = s[np.arange(k), j]
        arg[:, i] = pt[j]
    return best, arg


def _refine_point(mask, design, p_t, delta, dp, dd, delta_hi):
    """Alternating golden-section in P_T then delta around a grid maximiser."""

    def size(pt, d):
        lo, hi = admissible_range(d)
        pt = min(max(pt, lo), hi)
        return float(_sizes_at(mask[None], design, np.array([pt]), np.array([min(max(pt - d, 0.0), 1.0)]))[0, 0]), pt

    best, p_t = size(p_t, delta)
    for _ in range(2):
        lo, hi = admissible_range(delta)
        a, b = max(lo, p_t - dp), min(hi, p_t + dp)
        if b > a:
            x, fx = golden_max(lambda v: size(v, delta)[0], a, b, SIZE_REFINE_TOL)
            if fx > best:
                best, p_t = fx, x
        # delta range keeping p_t admissible: p_t - 1 <= delta <= p_t, within the null
        a, b = max(-1.0, p_t - 1.0, delta - dd), min(delta_hi, p_t, delta + dd)
        if b > a:
            x, fx = golden_max(lambda v: size(p_t, v)[0], a, b, SIZE_REFINE_TOL)
            if fx > best:
                best, delta = fx, x
    return best, p_t, delta


def _check_regions(regions):
    design = regions[0].design
    delta0 = regions[0].delta0
    if any(r.design != design or r.delta0 != delta0 for r in regions):
        raise DomainError("regions must share the design and margin")
    return design, delta0


def size_profile(regions: list[DecisionSet], delta_step: float = SIZE_DELTA_STEP, pt_points: int = SIZE_PT_POINTS):
    """Grid maximum over P_T of each region's rejection probability at every null delta.

    Returns ``(deltas, sizes, argmax_p_t)`` with ``sizes`` and ``argmax_p_t`` of shape (K, D).
    """
    design, delta0 = _check_regions(regions)
    deltas = grid(-1.0, -delta0, delta_step)
    best, arg = _grid_maxima(np.stack([r.mask for r in regions]), design, deltas, pt_points)
    return deltas, best, arg


def maximal_sizes(
    regions: list[DecisionSet],
    delta_step: float = SIZE_DELTA_STEP,
    pt_points: int = SIZE_PT_POINTS,
    refine: bool = True,
    profile=None,
) -> list[SizeResult]:
    """Supremum of the rejection probability over the null {delta <= -delta0} for each region.

    A (delta, P_T) grid is searched and the best cells are polished by golden-section
    steps in each coordinate.  The boundary-only supremum at delta = -delta0 is also
    reported.  All regions must share a design and margin; ``profile`` may carry a
    precomputed :func:`size_profile` for the same grid.
    """
    if not regions:
        return []
    design, delta0 = _check_regions(regions)
    masks = np.stack([r.mask for r in regions])
    deltas, best, arg = profile if profile is not None else size_profile(regions, delta_step, pt_points)
    # boundary line at 4x the P_T resolution
    bpt = _pt_grid(-delta0, 4 * (pt_points - 1) + 1)
    bs = _sizes_at(masks, design, bpt, np.clip(bpt + delta0, 0.0, 1.0))
    dp = 1.0 / (pt_points - 1)
    out = []
    for k, region in enumerate(regions):
        jb = int(np.argmax(bs[k]))
        b_val, b_pt = float(bs[k, jb]), float(bpt[jb])
        i = int(np.argmax(best[k]))
        val, p_t, d = float(best[k, i]), float(arg[k, i]), float(deltas[i])
        if refine and val > 0.0:
            if len(bpt) > 1:
                bv, bp, _ = _refine_point(masks[k], design, b_pt, -delta0, 1.0 / (len(bpt) - 1), 0.0, -delta0)
                if bv > b_val:
                    b_val, b_pt = bv, bp
            for i in np.argsort(-best[k], kind="stable")[:SIZE_STARTS]:
                v, pt_i, d_i = _refine_point(
                    masks[k], design, float(arg[k, i]), float(deltas[i]), dp, delta_step, -delta0
                )
                if v > val:
                    val, p_t, d = v, pt_i, d_i
        if b_val > val:
            val, p_t, d = b_val, b_pt, -delta0
        out.append(SizeResult(min(val, 1.0), p_t, d, min(b_val, 1.0), b_pt, delta_step, pt_points))
    return out


def maximal_size(
    design: TrialDesign,
    delta0: float,
    alpha: float,
    method: str,
    delta_step: float = SIZE_DELTA_STEP,
    pt_points: int = SIZE_PT_POINTS,
    grid_points: int = P_GRID,
) -> SizeResult:
    region = critical_region(design, delta0, alpha, method, grid_points)
    return maximal_sizes([region], delta_step, pt_points)[0]


# -- power ---------------------------------------------------------------------


@dataclass(frozen=True)
class PowerCurve:
    p_t: float
    delta_grid: np.ndarray
    admissible: np.ndarray
    reject_prob: dict[str, np.ndarray]
    n_aa: int
    n_ar: int
    n_rr: int
    # CZ rejects while EC accepts; zero whenever the nesting of the regions holds
    n_ra: int


def power_curve(
    design: TrialDesign,
    delta0: float,
    alpha: float,
    p_t: float,
    delta_grid,
    methods=METHODS,
    grid_points: int = P_GRID,
    regions: dict[str, DecisionSet] | None = None,
) -> PowerCurve:
    """Rejection probability of each method at (p_t, delta) across ``delta_grid``.

    Grid points with P_C = p_t - delta outside [0, 1] are skipped (NaN) and marked
    inadmissible.  Agreement counts compare the CZ and EC regions.
    """
    delta_grid = np.asarray(delta_grid, dtype=float)
    p_c = p_t - delta_grid
    ok = (p_c >= -1e-12) & (p_c <= 1 + 1e-12)
    if not ok.any():
        raise DomainError(f"no admissible delta for p_t={p_t}")
    methods = tuple(dict.fromkeys(tuple(methods) + ("cz", "ec")))
    regions = regions or all_regions(design, delta0, alpha, methods, grid_points)
    masks = np.stack([regions[m].mask for m in methods])
    sizes = np.full((len(methods), len(delta_grid)), np.nan)
    sizes[:, ok] = np.minimum(
        _sizes_at(masks, design, np.full(ok.sum(), p_t), np.clip(p_c[ok], 0.0, 1.0)), 1.0
    )
    cz, ec = regions["cz"].rejected, regions["ec"].rejected
    return PowerCurve(
        p_t=float(p_t),
        delta_grid=delta_grid,
        admissible=ok,
        reject_prob={m: sizes[i] for i, m in enumerate(methods)},
        n_aa=int((~cz & ~ec).sum()),
        n_ar=int((~cz & ec).sum()),
        n_rr=int((cz & ec).sum()),
        n_ra=int((cz & ~ec).sum()),
    )


# -- Monte Carlo expectation of the correction term ------------------------------


@dataclass(frozen=True)
class ECExpectation:
    n_t: int
    n_c: int
    p_t: float
    p_c: float
    delta0: float
    mean: float
    se: float
    n_sims: int
    n_used: int
    n_degenerate: int
    seed: int


def uniforms(seed: int, n_sims: int) -> np.ndarray:
    """Counter-based uniforms keyed by ``seed``: row i holds replicate i, columns the two arms.

    Row i depends only on (seed, i), so results do not depend on how work is split.
    """
    if n_sims < 1:
        raise DomainError(f"n_sims must be >= 1, got {n_sims}")
    return np.random.Generator(np.random.Philox(key=int(seed))).random((int(n_sims), 2))


def binomial_inverse(n: int, p: float, u: np.ndarray) -> np.ndarray:
    """Binomial(n, p) draws by inverting the CDF at uniforms ``u``."""
    cdf = np.cumsum(binom_pmf_matrix(n, p))
    cdf[-1] = 1.0
    return np.minimum(np.searchsorted(cdf, u, side="right"), n)


def _draw(design: TrialDesign, p_t: float, p_c: float, u: np.ndarray) -> np.ndarray:
    xt = binomial_inverse(design.n_t, p_t, u[:, 0])
    xc = binomial_inverse(design.n_c, p_c, u[:, 1])
    return xt * (design.n_c + 1) + xc


def _probit_upper(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Phi^{-1}(1 - p) using whichever of p and its complement q is smaller."""
    from scipy.special import ndtri

    p = np.clip(p, PROBIT_FLOOR, 1.0)
    q = np.clip(q, PROBIT_FLOOR, 1.0)
    return np.where(p <= 0.5, -ndtri(p), ndtri(q))


def _corrections(design, delta0, tables, exact, comp, delta):
    """EC_delta for the flat table indices given their exact p-values; NaN where sigma_delta = 0."""
    xt, xc = np.divmod(tables, design.n_c + 1)
    z0 = z_delta_all(design, delta0)[tables]
    p1, p2 = restricted_mle_arrays(xt, xc, design.n_t, design.n_c, -delta0)
    s0 = sigma_hat_arrays(p1, p2, design.n_t, design.n_c)
    # a zero-variance margin carries no correction (0/0 read as 0)
    gap = np.where(s0 > 0, z0 - _probit_upper(exact, comp), 0.0)
    if delta == delta0:
        return gap
    p1, p2 = restricted_mle_arrays(xt, xc, design.n_t, design.n_c, -delta)
    sd = sigma_hat_arrays(p1, p2, design.n_t, design.n_c)
    ratio = np.where(s0 > 0, np.nan, 0.0)
    np.divide(s0, sd, out=ratio, where=(sd > 0) & (s0 > 0))
    return ratio * gap


def _summarise(design, p_t, p_c, delta0, ec, seed) -> ECExpectation:
    used = ec[np.isfinite(ec)]
    n = len(used)
    mean = float(used.mean()) if n else math.nan
    se = float(used.std(ddof=1) / math.sqrt(n)) if n > 1 else math.nan
    return ECExpectation(design.n_t, design.n_c, float(p_t), float(p_c), float(delta0), mean, se, len(ec), n, len(ec) - n, int(seed))


def ec_expectation(
    design: TrialDesign,
    p_t: float,
    p_c: float,
    delta0: float,
    n_sims: int = 10_000,
    seed: int = 0,
    grid_points: int = P_GRID,
) -> ECExpectation:
    """Monte Carlo mean and standard error of EC_delta at delta = p_t - p_c.

    Draws where sigma_delta is zero have no finite correction; they are left out of the
    mean and counted in ``n_degenerate``.
    """
    return ec_expectation_grid(design, [(p_t, p_c)], delta0, n_sims, seed, grid_points)[0]


def ec_expectation_grid(
    design: TrialDesign,
    probs,
    delta0: float,
    n_sims: int = 10_000,
    seed: int = 0,
    grid_points: int = P_GRID,
) -> list[ECExpectation]:
    """As :func:`ec_expectation` for several (p_t, p_c) pairs sharing a design and margin.

    Exact p-values are computed once for the union of drawn tables.  Every pair uses the
    same uniforms (common random numbers).
    """
    delta0 = check_margin(delta0)
    for p_t, p_c in probs:
        if not (0.0 <= p_t <= 1.0 and 0.0 <= p_c <= 1.0):
            raise DomainError(f"probabilities must lie in [0, 1], got ({p_t}, {p_c})")
    u = uniforms(seed, n_sims)
    draws = [_draw(design, p_t, p_c, u) for p_t, p_c in probs]
    uniq = np.unique(np.concatenate(draws))
    exact, comp = p_exact_all(design, delta0, grid_points, uniq)
    out = []
    for (p_t, p_c), d in zip(probs, draws):
        pos = np.searchsorted(uniq, d)
        ec = _corrections(design, delta0, d, exact[pos], comp[pos], float(p_t - p_c))
        out.append(_summarise(design, p_t, p_c, delta0, ec, seed))
    return out


def ec_expectation_study(
    sizes,
    p_values=(0.3, 0.5, 0.7),
    margins=(0.0, 0.1, 0.2),
    n_sims: int = 10_000,
    seed: int = 0,
    threads: int = 1,
    grid_points: int = P_GRID,
) -> list[ECExpectation]:
    """Expectation grid over N = N_T = N_C in ``sizes``, P_T x P_C in ``p_values`` and ``margins``.

    Blocks (N, delta0) run on ``threads`` workers; output order is fixed.
    """
    probs = [(a, b) for a in p_values for b in p_values]
    jobs = [(int(n), float(m)) for n in sizes for m in margins]

    def run(job):
        n, m = job
        return ec_expectation_grid(TrialDesign(n, n), probs, m, n_sims, seed, grid_points)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(run, jobs))
    else:
        blocks = [run(j) for j in jobs]
    return [r for b in blocks for r in b]


__all__ = [
    "METHODS",
    "DecisionSet",
    "PowerCurve",
    "SizeResult",
    "ECExpectation",
    "critical_region",
    "all_regions",
    "conditional_size",
    "maximal_size",
    "maximal_sizes",
    "size_profile",
    "power_curve",
    "uniforms",
    "binomial_inverse",
    "ec_expectation",
    "ec_expectation_grid",
    "ec_expectation_study",
]
