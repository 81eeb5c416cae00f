"""Closed-form learners: the classical baseline-only regressor, the privileged
estimator that chains per-step least-squares fits through intermediate time
steps, its kernelized form, and the norm-constrained per-step variant.

All fits are pure functions of (data, map/kernel); fitted models are
immutable and safe to share across workers for prediction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dgp import TimeSeriesDataset
from .features import FeatureMap, RrfMap
from .linalg import lstsq, norm_constrained_lstsq
from .linalg import pinv
from .seeding import stream_seed


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------

class LinearKernel:
    """k(x, x') = <x, x'>."""

    name = "linear"

    def __call__(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return np.asarray(a, dtype=np.float64) @ np.asarray(b, dtype=np.float64).T

    def params(self) -> dict:
        return {}


class GaussianKernel:
    """k(x, x') = exp(-gamma ||x - x'||^2)."""

    name = "gaussian"

    def __init__(self, gamma: float):
        if gamma <= 0:
            raise ValueError(f"gamma must be positive, got {gamma}")
        self.gamma = float(gamma)

    def __call__(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        sq = (
            np.sum(a ** 2, axis=1)[:, None]
            + np.sum(b ** 2, axis=1)[None, :]
            - 2.0 * (a @ b.T)
        )
        return np.exp(-self.gamma * np.maximum(sq, 0.0))

    def params(self) -> dict:
        return {"gamma": self.gamma}


Kernel = Callable[[np.ndarray, np.ndarray], np.ndarray]


# ---------------------------------------------------------------------------
# Fitted models
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Diagnostics:
    """Per-step fit byproducts kept for spectral and invariance checks."""

    transitions: list[np.ndarray] = field(default_factory=list)
    beta: np.ndarray | None = None
    transition_spectral_norms: list[float] = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class LinearPredictor:
    """Weights over a realized feature map: predict(x) = weights^T phi(x).

    For the per-step-map variant, feature_maps holds one map per time step
    and predictions embed with the step-1 map.
    """

    feature_maps: tuple[FeatureMap, ...]
    weights: np.ndarray                      # (d_hat_1, q)
    diagnostics: Diagnostics | None = None

    @property
    def feature_map(self) -> FeatureMap:
        return self.feature_maps[0]

    def predict(self, x: np.ndarray) -> np.ndarray:
        phi = self.feature_map.apply(np.asarray(x, dtype=np.float64))
        return phi @ self.weights


@dataclass(frozen=True, eq=False)
class KernelPredictor:
    """Dual coefficients over the training baseline points:
    predict(x) = sum_i alpha_i k(x_{i,1}, x)."""

    kernel: Kernel
    support_points: np.ndarray               # (m, k), training X_1
    dual_coefficients: np.ndarray            # (m, q)

    def predict(self, x: np.ndarray) -> np.ndarray:
        gram = self.kernel(np.asarray(x, dtype=np.float64), self.support_points)
        return gram @ self.dual_coefficients


def predict(model, x_test) -> np.ndarray:
    """Vectorized predictions of a fitted model on test rows."""
    return model.predict(x_test)


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------

def _resolve_maps(feature_map, horizon: int) -> tuple[FeatureMap, ...]:
    if isinstance(feature_map, FeatureMap):
        return (feature_map,) * horizon
    maps = tuple(feature_map)
    if len(maps) != horizon:
        raise ValueError(
            f"expected {horizon} per-step maps, got {len(maps)}"
        )
    return maps


def fit_classical(data: TimeSeriesDataset, feature_map: FeatureMap) -> LinearPredictor:
    """Ordinary least squares of Y on the embedded baseline step only.

    Uses the pseudo-inverse normal equations, so m < d_hat yields the
    minimum-norm solution.
    """
    z1 = feature_map.apply(data.step(1))
    weights = lstsq(z1, data.y)
    return LinearPredictor(feature_maps=(feature_map,), weights=weights)


def fit_lupts(data: TimeSeriesDataset, feature_map) -> LinearPredictor:
    """Privileged least squares: embed every time step, regress each step on
    the next and the outcome on the last, and compose the chain.

    feature_map is either a single map shared by all steps or a sequence of
    one map per step (fresh random features per step, for example).
    """
    shared = isinstance(feature_map, FeatureMap)
    maps = _resolve_maps(feature_map, data.horizon)
    embedded = [maps[t].apply(data.x[:, t, :]) for t in range(data.horizon)]

    transitions = [
        lstsq(embedded[t], embedded[t + 1]) for t in range(data.horizon - 1)
    ]
    beta = lstsq(embedded[-1], data.y)

    weights = beta
    for a in reversed(transitions):
        weights = a @ weights

    diagnostics = Diagnostics(
        transitions=transitions,
        beta=beta,
        transition_spectral_norms=[
            float(np.linalg.svd(a, compute_uv=False)[0]) for a in transitions
        ],
    )
    return LinearPredictor(
        feature_maps=(maps[0],) if shared else maps,
        weights=weights, diagnostics=diagnostics,
    )


def fit_kernel_lupts(data: TimeSeriesDataset, kernel: Kernel,
                     symmetry_tol: float = 1e-8) -> KernelPredictor:
    """Dual form of the privileged estimator:
    alpha = K_1^+ [prod_{t=2..T} K_t K_t^+] Y."""
    grams = []
    for t in range(1, data.horizon + 1):
        xt = data.step(t)
        k = np.asarray(kernel(xt, xt), dtype=np.float64)
        asym = np.max(np.abs(k - k.T)) if k.size else 0.0
        if asym > symmetry_tol:
            raise ValueError(
                f"kernel Gram matrix at step {t} is asymmetric by {asym:.3e}"
            )
        grams.append(0.5 * (k + k.T))

    acc = data.y
    for k in reversed(grams[1:]):
        acc = k @ (pinv(k) @ acc)
    alpha = pinv(grams[0]) @ acc
    return KernelPredictor(
        kernel=kernel, support_points=data.step(1).copy(),
        dual_coefficients=alpha,
    )


def fit_consistent_rrf_lupts(data: TimeSeriesDataset,
                             widths_per_step: Sequence[int],
                             gamma: float, radius: float,
                             seed: int = 0) -> LinearPredictor:
    """Norm-constrained per-step estimator with fresh random ReLU features at
    every time step.

    The outcome head is fitted first on the last step's features, then each
    transition is fitted step by step backward; every fitted coordinate
    predictor is constrained to the Euclidean ball of the given radius.
    """
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    widths = [int(w) for w in widths_per_step]
    if len(widths) != data.horizon:
        raise ValueError(
            f"expected {data.horizon} widths, got {len(widths)}"
        )

    maps = tuple(
        RrfMap(data.n_features, widths[t], gamma, seed=stream_seed(seed, "step", t))
        for t in range(data.horizon)
    )
    embedded = [maps[t].apply(data.x[:, t, :]) for t in range(data.horizon)]

    beta = np.column_stack([
        norm_constrained_lstsq(embedded[-1], data.y[:, j], radius)
        for j in range(data.n_outputs)
    ])

    transitions: list[np.ndarray | None] = [None] * (data.horizon - 1)
    for t in range(data.horizon - 2, -1, -1):
        transitions[t] = np.column_stack([
            norm_constrained_lstsq(embedded[t], embedded[t + 1][:, j], radius)
            for j in range(widths[t + 1])
        ])

    weights = beta
    for a in reversed(transitions):
        weights = a @ weights

    diagnostics = Diagnostics(
        transitions=list(transitions),
        beta=beta,
        transition_spectral_norms=[
            float(np.linalg.svd(a, compute_uv=False)[0]) for a in transitions
        ],
    )
    return LinearPredictor(feature_maps=maps, weights=weights,
                           diagnostics=diagnostics)
