"""Restricted maximum likelihood of (P_T, P_C) under a fixed difference.

The closed form is the trigonometric solution of the score cubic used by
Miettinen & Nurminen and Farrington & Manning.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .core import DomainError, ObservedTable, TrialDesign, admissible_range, check_table

# Set NONINF_CHECK_RMLE=1 to cross-check every closed-form solution against the
# grid oracle (slow).
CHECK_AGAINST_ORACLE = os.environ.get("NONINF_CHECK_RMLE", "") not in ("", "0")


@dataclass(frozen=True)
class RestrictedEstimate:
    p_t_tilde: float
    p_c_tilde: float
    constraint_d: float


def restricted_mle_arrays(x_t, x_c, n_t: int, n_c: int, d: float):
    """Vectorised restricted MLE for the constraint P_T - P_C = d.

    Returns ``(p_t_tilde, p_c_tilde)`` arrays broadcast from ``x_t`` and ``x_c``.
    """
    d = float(d)
    if not -1.0 <= d <= 1.0:
        raise DomainError(f"constraint difference must lie in [-1, 1], got {d}")
    x_t, x_c = np.broadcast_arrays(np.asarray(x_t, float), np.asarray(x_c, float))
    if d == 1.0:
        return np.ones_like(x_t), np.zeros_like(x_t)
    if d == -1.0:
        return np.zeros_like(x_t), np.ones_like(x_t)
    if d == 0.0:
        pooled = (x_t + x_c) / (n_t + n_c)
        return pooled, pooled.copy()

    pt_hat = x_t / n_t
    pc_hat = x_c / n_c
    theta = n_c / n_t
    a = 1.0 + theta
    b = -(1.0 + theta + pt_hat + theta * pc_hat + d * (theta + 2.0))
    c = d * d + d * (2.0 * pt_hat + theta + 1.0) + pt_hat + theta * pc_hat
    e = -pt_hat * d * (1.0 + d)
    v = b**3 / (3.0 * a) ** 3 - b * c / (6.0 * a * a) + e / (2.0 * a)
    u = np.where(v < 0, -1.0, 1.0) * np.sqrt(np.maximum(b * b / (3.0 * a) ** 2 - c / (3.0 * a), 0.0))
    degenerate = u == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.clip(v / np.where(degenerate, 1.0, u) ** 3, -1.0, 1.0)
    w = (math.pi + np.arccos(ratio)) / 3.0
    p1 = 2.0 * u * np.cos(w) - b / (3.0 * a)

    lo, hi = admissible_range(d)
    p1 = np.clip(p1, lo, hi)
    if np.any(degenerate):
        from .oracle import oracle_rmle_point

        for i in zip(*np.nonzero(degenerate)):
            p1[i] = oracle_rmle_point(int(x_t[i]), int(x_c[i]), n_t, n_c, d)
    p2 = np.clip(p1 - d, 0.0, 1.0)

    if CHECK_AGAINST_ORACLE:
        from .oracle import oracle_rmle_point

        for i in np.ndindex(p1.shape):
            ref = oracle_rmle_point(int(x_t[i]), int(x_c[i]), n_t, n_c, d)
            if abs(ref - p1[i]) > 1e-6:
                raise AssertionError(
                    f"closed-form restricted MLE {p1[i]} disagrees with oracle {ref} "
                    f"for x_t={x_t[i]}, x_c={x_c[i]}, n_t={n_t}, n_c={n_c}, d={d}"
                )
    return p1, p2


def restricted_mle(table: ObservedTable, design: TrialDesign, d: float) -> RestrictedEstimate:
    """Maximise the joint likelihood over {(p, p - d)} for the observed table."""
    check_table(table, design)
    p1, p2 = restricted_mle_arrays(table.x_t, table.x_c, design.n_t, design.n_c, d)
    return RestrictedEstimate(float(p1), float(p2), float(d))


def sigma_hat_arrays(p1, p2, n_t: int, n_c: int):
    return np.sqrt(p1 * (1.0 - p1) / n_t + p2 * (1.0 - p2) / n_c)


def sigma_hat(est: RestrictedEstimate, design: TrialDesign) -> float:
    return float(sigma_hat_arrays(est.p_t_tilde, est.p_c_tilde, design.n_t, design.n_c))
