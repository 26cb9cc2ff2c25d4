"""Flexi-Fuzz weighted least-squares SVM and its experiment harness."""

__version__ = "0.1.0"

from .exceptions import (
    DataError,
    DegenerateStatisticError,
    FlexiFuzzError,
    SingularSystemError,
    SplitError,
    TrainingError,
)
from .kernel_linalg import KernelSpec, gaussian_kernel, kernel_matrix, solve_dense
from .membership import (
    CenterEstimator,
    MembershipConfig,
    MembershipVector,
    Scheme,
    compute_membership,
    flexi_fuzz_membership,
)
from .classifier import TrainConfig, TrainedModel, predict, train
from .dataio import Dataset, Standardizer, load_csv

__all__ = [
    "__version__",
    "CenterEstimator",
    "DataError",
    "Dataset",
    "DegenerateStatisticError",
    "FlexiFuzzError",
    "KernelSpec",
    "MembershipConfig",
    "MembershipVector",
    "Scheme",
    "SingularSystemError",
    "SplitError",
    "Standardizer",
    "TrainConfig",
    "TrainedModel",
    "TrainingError",
    "compute_membership",
    "flexi_fuzz_membership",
    "gaussian_kernel",
    "kernel_matrix",
    "load_csv",
    "predict",
    "solve_dense",
    "train",
]
