"""Heteroscedastic semiparametric transformation models.

Fit ``Lambda_theta(Y) = m(X) + sigma(X) eps`` with a Yeo-Johnson
transformation by profile likelihood, and test the model with bootstrap
calibrated Kolmogorov-Smirnov and Cramer-von Mises statistics.
"""

__version__ = "0.1.0"

from .bootstrap import BootstrapConfig, TestResult, run_test
from .estimator import Dataset, EstimatorConfig, FittedTransformModel, fit, profile_loglik
from .exceptions import (
    BootstrapError,
    DomainError,
    EstimationError,
    EvaluationError,
    RangeError,
    SemitransError,
)
from .testing import TestStatistics, compute_statistics
from .transform import yj_deriv_y, yj_grad_theta, yj_inverse, yj_value

__all__ = [
    "__version__",
    "BootstrapConfig",
    "TestResult",
    "run_test",
    "Dataset",
    "EstimatorConfig",
    "FittedTransformModel",
    "fit",
    "profile_loglik",
    "SemitransError",
    "DomainError",
    "RangeError",
    "EvaluationError",
    "EstimationError",
    "BootstrapError",
    "TestStatistics",
    "compute_statistics",
    "yj_value",
    "yj_inverse",
    "yj_deriv_y",
    "yj_grad_theta",
]
