"""Operator scaled Wiener bridges: exact covariances, spectral splitting, simulation and law checks."""

__version__ = "0.1.0"

from .analysis import classify, convergence_diagnostic, decay_exponent, rescaled_limit_probe
from .bridgecore import (
    BridgeModel,
    covariance,
    covariance_ode_residual,
    cross_covariance,
    martingale_factor,
    quadratic_variation,
)
from .matfun import eigen_summary, expm, op_power, op_power_at_zero
from .sampler import append_terminal_zero, sample_euler, sample_exact
from .spectral import decompose, project_path, project_power
from .uniqueness import commutator_defect, compare_laws, respec_consistency

__all__ = [
    "BridgeModel",
    "append_terminal_zero",
    "classify",
    "commutator_defect",
    "compare_laws",
    "convergence_diagnostic",
    "covariance",
    "covariance_ode_residual",
    "cross_covariance",
    "decay_exponent",
    "decompose",
    "eigen_summary",
    "expm",
    "martingale_factor",
    "op_power",
    "op_power_at_zero",
    "project_path",
    "project_power",
    "quadratic_variation",
    "rescaled_limit_probe",
    "respec_consistency",
    "sample_euler",
    "sample_exact",
]
