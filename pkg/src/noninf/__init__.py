"""Exact unconditional tests and confidence intervals for the risk difference in noninferiority trials."""

__version__ = "0.1.0"

from .core import (
    DomainError,
    NullPoint,
    ObservedTable,
    TrialDesign,
    enumerate_space,
    joint_pmf,
)
from .exact import fisher_exact, p_cz, p_exact, p_l, p_u, tail_prob
from .intervals import Interval, ci_cz, ci_ec, ci_mn, ci_wald, ec_correction, z_ec
from .opchar import (
    DecisionSet,
    PowerCurve,
    conditional_size,
    critical_region,
    ec_expectation,
    maximal_size,
    power_curve,
)
from .rmle import RestrictedEstimate, restricted_mle, sigma_hat
from .stats import (
    StatisticKind,
    barnard_check,
    monotonicity_check,
    p_asy,
    p_wald,
    wald_z,
    z_delta,
)

__all__ = [
    "DomainError",
    "NullPoint",
    "ObservedTable",
    "TrialDesign",
    "enumerate_space",
    "joint_pmf",
    "fisher_exact",
    "p_cz",
    "p_exact",
    "p_l",
    "p_u",
    "tail_prob",
    "Interval",
    "ci_cz",
    "ci_ec",
    "ci_mn",
    "ci_wald",
    "ec_correction",
    "z_ec",
    "DecisionSet",
    "PowerCurve",
    "conditional_size",
    "critical_region",
    "ec_expectation",
    "maximal_size",
    "power_curve",
    "RestrictedEstimate",
    "restricted_mle",
    "sigma_hat",
    "StatisticKind",
    "barnard_check",
    "monotonicity_check",
    "p_asy",
    "p_wald",
    "wald_z",
    "z_delta",
]
