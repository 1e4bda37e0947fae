"""Sample space, joint binomial likelihood and standard normal primitives."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import special


class DomainError(ValueError):
    """Raised when an input lies outside the model's admissible region."""


@dataclass(frozen=True)
class TrialDesign:
    n_t: int
    n_c: int

    def __post_init__(self):
        for name in ("n_t", "n_c"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))

    @property
    def size(self) -> int:
        return (self.n_t + 1) * (self.n_c + 1)

    def index(self, table: "ObservedTable") -> int:
        """Position of ``table`` in the row-major enumeration."""
        check_table(table, self)
        return table.x_t * (self.n_c + 1) + table.x_c

    def grids(self) -> tuple[np.ndarray, np.ndarray]:
        """Flat (x_t, x_c) arrays in enumeration order."""
        xt, xc = np.meshgrid(np.arange(self.n_t + 1), np.arange(self.n_c + 1), indexing="ij")
        return xt.ravel(), xc.ravel()


@dataclass(frozen=True)
class ObservedTable:
    x_t: int
    x_c: int


@dataclass(frozen=True)
class NullPoint:
    p_t: float
    delta: float

    @property
    def p_c(self) -> float:
        return self.p_t - self.delta


ADMISSIBLE_EPS = 1e-12


def check_table(table: ObservedTable, design: TrialDesign) -> None:
    if not (0 <= table.x_t <= design.n_t and 0 <= table.x_c <= design.n_c):
        raise DomainError(f"table {table} outside design {design}")


def check_margin(delta0: float) -> float:
    delta0 = float(delta0)
    if not 0.0 <= delta0 < 1.0:
        raise DomainError(f"margin must lie in [0, 1), got {delta0}")
    return delta0


def admissible_range(delta: float) -> tuple[float, float]:
    """Interval of P_T values compatible with the difference ``delta``."""
    if not -1.0 - ADMISSIBLE_EPS <= delta <= 1.0 + ADMISSIBLE_EPS:
        raise DomainError(f"delta must lie in [-1, 1], got {delta}")
    return max(0.0, delta), min(1.0, 1.0 + delta)


def check_point(point: NullPoint) -> None:
    lo, hi = admissible_range(point.delta)
    if not lo - ADMISSIBLE_EPS <= point.p_t <= hi + ADMISSIBLE_EPS:
        raise DomainError(f"{point} violates max(0, delta) <= p_t <= min(1, 1 + delta)")


def _clip01(p):
    return np.clip(p, 0.0, 1.0)


def binom_pmf_matrix(n: int, p) -> np.ndarray:
    """Binomial(n, p) pmf over 0..n for each entry of ``p``; shape ``p.shape + (n + 1,)``.

    Evaluated in log space with 0 * log(0) = 0, so boundary probabilities are exact.
    """
    p = _clip01(np.asarray(p, dtype=float))
    k = np.arange(n + 1, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        lp = np.log(p)[..., None] * k
        lq = np.log1p(-p)[..., None] * (n - k)
    # 0 * log(0) = 0
    lp[..., 0] = 0.0
    lq[..., n] = 0.0
    lp += lq
    lp += _log_binom_coef(n)
    return np.exp(lp, out=lp)


@functools.lru_cache(maxsize=256)
def _log_binom_coef(n: int) -> np.ndarray:
    k = np.arange(n + 1)
    out = special.gammaln(n + 1) - special.gammaln(k + 1) - special.gammaln(n - k + 1)
    out.flags.writeable = False
    return out


def joint_pmf(table: ObservedTable, design: TrialDesign, point: NullPoint) -> float:
    check_table(table, design)
    check_point(point)
    pt = binom_pmf_matrix(design.n_t, point.p_t)[table.x_t]
    pc = binom_pmf_matrix(design.n_c, point.p_c)[table.x_c]
    return float(pt * pc)


def joint_pmf_all(design: TrialDesign, p_t, delta) -> np.ndarray:
    """Joint pmf of every table (enumeration order) at each (p_t, delta) pair.

    ``p_t`` and ``delta`` broadcast; result has shape ``broadcast + (design.size,)``.
    """
    p_t, delta = np.broadcast_arrays(np.asarray(p_t, float), np.asarray(delta, float))
    a = binom_pmf_matrix(design.n_t, p_t)
    b = binom_pmf_matrix(design.n_c, p_t - delta)
    return (a[..., :, None] * b[..., None, :]).reshape(p_t.shape + (design.size,))


def enumerate_space(design: TrialDesign) -> list[ObservedTable]:
    return [ObservedTable(i, j) for i in range(design.n_t + 1) for j in range(design.n_c + 1)]


def std_normal_cdf(z):
    return special.ndtr(z)


def std_normal_quantile(p):
    """Standard normal quantile; returns -inf / +inf at p = 0 / 1 instead of clamping."""
    arr = np.asarray(p, dtype=float)
    if np.any((arr < 0) | (arr > 1)) or np.any(np.isnan(arr)):
        raise DomainError("quantile requires p in [0, 1]")
    out = special.ndtri(arr)
    return float(out) if out.ndim == 0 else out


def upper_probit(p, q=None):
    """Phi^{-1}(1 - p) without forming 1 - p when p is small.

    ``q`` is an independently computed complement 1 - p; when given it is used for p > 0.5.
    """
    p = float(p)
    if p <= 0.5 or q is None:
        return -std_normal_quantile(p) if p <= 0.5 else std_normal_quantile(1.0 - p)
    return std_normal_quantile(float(q))


def grid(lo: float, hi: float, step: float) -> np.ndarray:
    """Equally spaced points from lo to hi inclusive with spacing at most ``step``."""
    if hi <= lo:
        return np.array([lo])
    k = max(1, int(math.ceil((hi - lo) / step - 1e-9)))
    g = np.linspace(lo, hi, k + 1)
    g[-1] = hi
    return g
