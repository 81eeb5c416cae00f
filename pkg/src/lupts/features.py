"""Realized representation functions: identity and linear maps, the
Square-Sign left inverse, and random Fourier / random ReLU feature maps.

Maps are immutable once constructed; their random parameters are drawn at
construction time from a seed, and application is pure.
"""

from __future__ import annotations

import numpy as np

from . import dgp
from .linalg import _EPS
from .seeding import stream_rng


class FeatureMap:
    """A realized representation x -> phi(x) applied row-wise to batches."""

    kind: str = "base"
    input_dim: int
    output_dim: int

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Map a batch (m, k) -> (m, d_hat). A single row (k,) is accepted
        and returned as (d_hat,)."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ValueError(
                f"expected inputs of width {self.input_dim}, got shape {x.shape}"
            )
        out = self._apply(x)
        return out[0] if single else out

    def _apply(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> dict:
        """JSON-serializable constructor parameters (arrays as lists)."""
        raise NotImplementedError


class IdentityMap(FeatureMap):
    kind = "identity"

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.input_dim = dim
        self.output_dim = dim

    def _apply(self, x):
        return x

    def params(self):
        return {"dim": self.input_dim}


class SquareSignInverseMap(FeatureMap):
    """Recovers latents from Square-Sign observations (the true left-inverse
    representation of that observation function)."""

    kind = "square_sign_inverse"

    def __init__(self, latent_dim: int):
        if latent_dim < 1:
            raise ValueError("latent_dim must be >= 1")
        self.input_dim = 2 * latent_dim
        self.output_dim = latent_dim

    def _apply(self, x):
        return dgp.square_sign_inverse(x)

    def params(self):
        return {"latent_dim": self.output_dim}


class LinearTransformMap(FeatureMap):
    """b_matrix @ base(x) for a matrix with linearly independent columns."""

    kind = "linear"

    def __init__(self, base: FeatureMap, b_matrix: np.ndarray):
        b = np.asarray(b_matrix, dtype=np.float64)
        if b.ndim != 2:
            raise ValueError("b_matrix must be 2-D")
        if b.shape[1] != base.output_dim:
            raise ValueError(
                f"b_matrix has {b.shape[1]} columns, base produces "
                f"{base.output_dim} features"
            )
        s = np.linalg.svd(b, compute_uv=False)
        if s.size == 0 or s[-1] <= max(b.shape) * _EPS * s[0]:
            raise ValueError("b_matrix columns are not linearly independent")
        self.base = base
        self.matrix = b
        self.input_dim = base.input_dim
        self.output_dim = b.shape[0]

    def _apply(self, x):
        return self.base.apply(x) @ self.matrix.T

    def params(self):
        return {"matrix": self.matrix.tolist(),
                "base": {"kind": self.base.kind, **self.base.params()}}


class RffMap(FeatureMap):
    """Random Fourier features: sqrt(2/d_hat) * cos(sqrt(2 gamma) W^T x + b),
    with W entries N(0,1) and offsets b uniform on [0, 2 pi)."""

    kind = "rff"

    def __init__(self, input_dim: int, output_dim: int, gamma: float,
                 seed: int = 0, *, projection: np.ndarray | None = None,
                 offsets: np.ndarray | None = None):
        if output_dim < 1:
            raise ValueError("output_dim must be >= 1")
        if gamma <= 0:
            raise ValueError(f"gamma must be positive, got {gamma}")
        self.input_dim = input_dim
        self.output_dim = output_dim
        self.gamma = float(gamma)
        self.seed = seed
        if projection is None:
            rng = stream_rng(seed, "rff")
            projection = rng.normal(size=(input_dim, output_dim))
            offsets = rng.uniform(0.0, 2.0 * np.pi, size=output_dim)
        self.projection = np.asarray(projection, dtype=np.float64)
        self.offsets = np.asarray(offsets, dtype=np.float64)

    def _apply(self, x):
        # einsum keeps batch application bit-identical to per-row application
        # (BLAS matmul kernels are shape-dependent in the last ulp).
        scale = np.sqrt(2.0 / self.output_dim)
        projected = np.einsum("ij,jk->ik", x, self.projection)
        return scale * np.cos(np.sqrt(2.0 * self.gamma) * projected + self.offsets)

    def params(self):
        return {"input_dim": self.input_dim, "output_dim": self.output_dim,
                "gamma": self.gamma,
                "projection": self.projection.tolist(),
                "offsets": self.offsets.tolist()}


class RrfMap(FeatureMap):
    """Random ReLU features: max(0, gamma W^T [x; 1]) with W entries
    uniform on (-1, 1); the appended constant gives each feature a bias."""

    kind = "rrf"

    def __init__(self, input_dim: int, output_dim: int, gamma: float,
                 seed: int = 0, *, projection: np.ndarray | None = None):
        if output_dim < 1:
            raise ValueError("output_dim must be >= 1")
        if gamma <= 0:
            raise ValueError(f"gamma must be positive, got {gamma}")
        self.input_dim = input_dim
        self.output_dim = output_dim
        self.gamma = float(gamma)
        self.seed = seed
        if projection is None:
            rng = stream_rng(seed, "rrf")
            projection = rng.uniform(-1.0, 1.0, size=(input_dim + 1, output_dim))
        self.projection = np.asarray(projection, dtype=np.float64)

    def _apply(self, x):
        augmented = np.column_stack([x, np.ones(x.shape[0])])
        projected = np.einsum("ij,jk->ik", augmented, self.projection)
        return np.maximum(0.0, self.gamma * projected)

    def params(self):
        return {"input_dim": self.input_dim, "output_dim": self.output_dim,
                "gamma": self.gamma,
                "projection": self.projection.tolist()}


def make_rff(input_dim: int, output_dim: int, gamma: float, seed: int = 0) -> RffMap:
    return RffMap(input_dim, output_dim, gamma, seed)


def make_rrf(input_dim: int, output_dim: int, gamma: float, seed: int = 0) -> RrfMap:
    return RrfMap(input_dim, output_dim, gamma, seed)


def make_linear_transform(base: FeatureMap, b_matrix) -> LinearTransformMap:
    return LinearTransformMap(base, b_matrix)


def apply_map(feature_map: FeatureMap, x_block) -> np.ndarray:
    """Row-wise application of a realized map to a batch of inputs."""
    return feature_map.apply(x_block)
