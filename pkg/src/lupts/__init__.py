"""Learning using privileged time series: estimators, synthetic generators,
representation learners and a reproducible experiment harness."""

__version__ = "0.1.0"

from .dgp import (
    LatentSystem,
    TimeSeriesDataset,
    generate_square_sign_dataset,
    sample_system,
    simulate,
    square_sign,
    square_sign_inverse,
)
from .estimators import (
    GaussianKernel,
    KernelPredictor,
    LinearKernel,
    LinearPredictor,
    fit_classical,
    fit_consistent_rrf_lupts,
    fit_kernel_lupts,
    fit_lupts,
    predict,
)
from .features import (
    FeatureMap,
    IdentityMap,
    RffMap,
    RrfMap,
    SquareSignInverseMap,
    apply_map,
    make_linear_transform,
    make_rff,
    make_rrf,
)
from .metrics import bias_variance, r2, svcca, true_conditional_mean

__all__ = [
    "FeatureMap",
    "GaussianKernel",
    "IdentityMap",
    "KernelPredictor",
    "LatentSystem",
    "LinearKernel",
    "LinearPredictor",
    "RffMap",
    "RrfMap",
    "SquareSignInverseMap",
    "TimeSeriesDataset",
    "apply_map",
    "bias_variance",
    "fit_classical",
    "fit_consistent_rrf_lupts",
    "fit_kernel_lupts",
    "fit_lupts",
    "generate_square_sign_dataset",
    "make_linear_transform",
    "make_rff",
    "make_rrf",
    "predict",
    "r2",
    "sample_system",
    "simulate",
    "square_sign",
    "square_sign_inverse",
    "svcca",
    "true_conditional_mean",
]
