"""Scoring and analysis: coefficient of determination, bias-variance
decomposition over repeated training sets, and PCA-then-CCA representation
similarity against the true latents."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dgp import LatentSystem
from .linalg import cca, pca


def r2(y_true, y_pred) -> float:
    """Coefficient of determination, averaged over output columns.

    1 - SS_res / SS_tot with SS_tot about the column means. Raises on a
    zero-variance target column.
    """
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_true.ndim == 1:
        y_true = y_true[:, None]
    if y_pred.ndim == 1:
        y_pred = y_pred[:, None]
    if y_true.shape != y_pred.shape:
        raise ValueError(
            f"shape mismatch: {y_true.shape} vs {y_pred.shape}"
        )
    if y_true.shape[0] < 2:
        raise ValueError("r2 requires at least 2 rows")

    ss_res = np.sum((y_true - y_pred) ** 2, axis=0)
    ss_tot = np.sum((y_true - y_true.mean(axis=0)) ** 2, axis=0)
    if np.any(ss_tot <= 0.0):
        raise ValueError("target has zero variance in some output column")
    return float(np.mean(1.0 - ss_res / ss_tot))


@dataclass(frozen=True, eq=False)
class BiasVarianceReport:
    """Squared bias and variance per output column, estimated over repeated
    training sets against a shared fixed test set."""

    squared_bias: np.ndarray      # (q,)
    variance: np.ndarray          # (q,)
    n_repetitions: int
    n_test_points: int

    @property
    def mean_squared_bias(self) -> float:
        return float(np.mean(self.squared_bias))

    @property
    def mean_variance(self) -> float:
        return float(np.mean(self.variance))


def bias_variance(fitted_models, test_x, true_conditional_mean) -> BiasVarianceReport:
    """Decompose prediction error of a model family over repetitions.

    Parameters
    ----------
    fitted_models : sequence
        One fitted model per repetition, each exposing predict(test_x).
    test_x : ndarray, shape (n, k)
        The shared test inputs.
    true_conditional_mean : ndarray, shape (n, q)
        E[Y | x] at the test inputs (available in synthetic systems only).

    Returns
    -------
    BiasVarianceReport
        squared bias = mean over test points of (mean-over-repetitions
        prediction - E[Y|x])^2; variance = mean over test points of the
        unbiased variance of predictions over repetitions.
    """
    models = list(fitted_models)
    if len(models) < 2:
        raise ValueError("bias_variance requires at least 2 repetitions")
    truth = np.asarray(true_conditional_mean, dtype=np.float64)
    if truth.ndim == 1:
        truth = truth[:, None]

    preds = np.stack([np.asarray(m.predict(test_x)) for m in models])  # (R, n, q)
    if preds.ndim == 2:
        preds = preds[:, :, None]
    if preds.shape[1:] != truth.shape:
        raise ValueError(
            f"predictions {preds.shape[1:]} disagree with truth {truth.shape}"
        )

    mean_pred = preds.mean(axis=0)
    sq_bias = np.mean((mean_pred - truth) ** 2, axis=0)
    var = np.mean(preds.var(axis=0, ddof=1), axis=0)
    return BiasVarianceReport(
        squared_bias=sq_bias, variance=var,
        n_repetitions=len(models), n_test_points=truth.shape[0],
    )


@dataclass(frozen=True, eq=False)
class SvccaResult:
    mean_correlation: float
    correlations: np.ndarray
    under_determined: bool = False


def svcca(learned_reps, true_latents, variance_retained: float = 0.99) -> SvccaResult:
    """PCA each view to the stated retained-variance level, then run CCA on
    the projections and average the canonical correlations.

    The result is flagged under-determined when the sample count is small
    relative to the retained dimensions.
    """
    learned = np.asarray(learned_reps, dtype=np.float64)
    truth = np.asarray(true_latents, dtype=np.float64)
    if learned.ndim != 2 or truth.ndim != 2:
        raise ValueError("both views must be 2-D")
    if learned.shape[0] != truth.shape[0]:
        raise ValueError(
            f"row mismatch: {learned.shape[0]} vs {truth.shape[0]}"
        )

    left = pca(learned, variance_retained)
    right = pca(truth, variance_retained)
    rho = cca(left.projected, right.projected)
    n = learned.shape[0]
    retained = left.projected.shape[1] + right.projected.shape[1]
    return SvccaResult(
        mean_correlation=float(np.mean(rho)),
        correlations=rho,
        under_determined=n < retained + 1,
    )


def true_conditional_mean(system: LatentSystem, z1_batch) -> np.ndarray:
    """E[Y | Z_1 = z] under the system: the noise-free rollout
    (A_1 ... A_{T-1} beta)^T z per row."""
    z1 = np.asarray(z1_batch, dtype=np.float64)
    if z1.ndim == 1:
        z1 = z1[None, :]
    if z1.shape[1] != system.d:
        raise ValueError(
            f"z1 width {z1.shape[1]} disagrees with system dimension {system.d}"
        )
    weights = system.outcome_map
    for a in reversed(system.transitions):
        weights = a @ weights
    return z1 @ weights
