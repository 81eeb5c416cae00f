"""Synthetic latent linear-Gaussian systems and the Square-Sign observation map.

Latent states evolve as Z_{t+1} = A_t^T Z_t + noise and the outcome is
Y = beta^T Z_T + noise. Observations are either the latents themselves
(identity observation) or their Square-Sign image, which interleaves the
square and the sign of every latent coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .seeding import stream_rng

DEFAULT_SPECTRAL_RADIUS = 1.3
DEFAULT_INIT_STD = np.sqrt(5.0)
SPECTRAL_RADIUS_TOL = 1e-6


def spectral_radius(a: np.ndarray) -> float:
    """Largest eigenvalue modulus of a square matrix."""
    return float(np.max(np.abs(np.linalg.eigvals(a))))


@dataclass
class LatentSystem:
    """Parameters of the latent linear-Gaussian data-generating process.

    transitions holds T-1 matrices of shape (d, d); outcome_map is (d, q).
    When target_spectral_radius is set, every transition matrix must carry
    exactly that spectral radius (within 1e-6); pass None for free-form
    systems built by hand.
    """

    d: int
    q: int
    horizon: int
    transitions: list[np.ndarray]
    outcome_map: np.ndarray
    transition_noise_std: float = 1.0
    outcome_noise_std: float = 1.0
    init_std: float = DEFAULT_INIT_STD
    target_spectral_radius: float | None = field(default=None)

    def __post_init__(self):
        if self.d < 1 or self.q < 1 or self.horizon < 1:
            raise ValueError("d, q and horizon must all be >= 1")
        if len(self.transitions) != self.horizon - 1:
            raise ValueError(
                f"expected {self.horizon - 1} transition matrices, "
                f"got {len(self.transitions)}"
            )
        self.transitions = [
            np.asarray(a, dtype=np.float64) for a in self.transitions
        ]
        self.outcome_map = np.asarray(self.outcome_map, dtype=np.float64)
        if self.outcome_map.shape != (self.d, self.q):
            raise ValueError(
                f"outcome_map must be ({self.d}, {self.q}), "
                f"got {self.outcome_map.shape}"
            )
        for t, a in enumerate(self.transitions):
            if a.shape != (self.d, self.d):
                raise ValueError(f"transition {t} has shape {a.shape}")
            if not np.all(np.isfinite(a)):
                raise ValueError(f"transition {t} has non-finite entries")
            if self.target_spectral_radius is not None:
                rho = spectral_radius(a)
                if abs(rho - self.target_spectral_radius) > SPECTRAL_RADIUS_TOL:
                    raise ValueError(
                        f"transition {t} has spectral radius {rho}, "
                        f"expected {self.target_spectral_radius}"
                    )
        if not np.all(np.isfinite(self.outcome_map)):
            raise ValueError("outcome_map has non-finite entries")


@dataclass
class TimeSeriesDataset:
    """Sampled sequences plus outcomes, the universal train/test container.

    x has shape (m, T, k); y has shape (m, q). For synthetic data the true
    latent states (m, T, d) may be retained for oracle analyses.
    """

    x: np.ndarray
    y: np.ndarray
    latents: np.ndarray | None = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.x.ndim != 3:
            raise ValueError(f"x must be (m, T, k), got shape {self.x.shape}")
        if self.y.ndim != 2:
            raise ValueError(f"y must be (m, q), got shape {self.y.shape}")
        if self.x.shape[0] != self.y.shape[0]:
            raise ValueError("x and y disagree on the number of series")
        if self.x.shape[0] < 1:
            raise ValueError("dataset must contain at least one series")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y))):
            raise ValueError("dataset contains non-finite values")
        if self.latents is not None:
            self.latents = np.asarray(self.latents, dtype=np.float64)
            if self.latents.shape[:2] != self.x.shape[:2]:
                raise ValueError("latents disagree with x on (m, T)")

    @property
    def n_samples(self) -> int:
        return self.x.shape[0]

    @property
    def horizon(self) -> int:
        return self.x.shape[1]

    @property
    def n_features(self) -> int:
        return self.x.shape[2]

    @property
    def n_outputs(self) -> int:
        return self.y.shape[1]

    def step(self, t: int) -> np.ndarray:
        """Observations at time step t (1-based), shape (m, k)."""
        if not 1 <= t <= self.horizon:
            raise ValueError(f"t must be in 1..{self.horizon}, got {t}")
        return self.x[:, t - 1, :]


def sample_system(d: int, q: int, horizon: int,
                  spectral_radius_target: float = DEFAULT_SPECTRAL_RADIUS,
                  seed: int = 0, *,
                  transition_noise_std: float = 1.0,
                  outcome_noise_std: float = 1.0,
                  init_std: float = DEFAULT_INIT_STD) -> LatentSystem:
    """Draw a random system: transitions with unit diagonal and N(0, 0.2)
    off-diagonals rescaled to the target spectral radius, and an outcome map
    with N(0, 0.2) entries.

    The 0.2 is a variance; rescaling multiplies the whole matrix by
    target/rho(A), which equals the eigendecomposition rescale for any
    diagonalizable matrix.
    """
    if d < 1 or q < 1 or horizon < 1:
        raise ValueError("d, q and horizon must all be >= 1")
    if spectral_radius_target <= 0:
        raise ValueError("spectral radius target must be positive")

    rng = stream_rng(seed, "system")
    off_std = np.sqrt(0.2)
    transitions = []
    for _ in range(horizon - 1):
        a = rng.normal(0.0, off_std, size=(d, d))
        np.fill_diagonal(a, 1.0)
        a *= spectral_radius_target / spectral_radius(a)
        transitions.append(a)
    beta = rng.normal(0.0, off_std, size=(d, q))
    return LatentSystem(
        d=d, q=q, horizon=horizon,
        transitions=transitions, outcome_map=beta,
        transition_noise_std=transition_noise_std,
        outcome_noise_std=outcome_noise_std,
        init_std=init_std,
        target_spectral_radius=spectral_radius_target,
    )


def simulate(system: LatentSystem, m: int, seed: int = 0) -> TimeSeriesDataset:
    """Roll the system forward for m independent series with identity
    observation (x = z). Latent states are stored on the dataset."""
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = stream_rng(seed, "simulate")
    d, q, horizon = system.d, system.q, system.horizon

    z = np.empty((m, horizon, d))
    z[:, 0, :] = rng.normal(0.0, system.init_std, size=(m, d))
    for t in range(horizon - 1):
        noise = rng.normal(0.0, system.transition_noise_std, size=(m, d))
        z[:, t + 1, :] = z[:, t, :] @ system.transitions[t] + noise

    y = z[:, -1, :] @ system.outcome_map
    y = y + rng.normal(0.0, system.outcome_noise_std, size=(m, q))
    return TimeSeriesDataset(x=z.copy(), y=y, latents=z)


def square_sign(z: np.ndarray) -> np.ndarray:
    """Interleave square and sign of every coordinate: [z1^2, sgn z1, ...].

    Works on a vector (d,) -> (2d,) or a batch (..., d) -> (..., 2d);
    sgn(0) = 0.
    """
    z = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise ValueError("input contains non-finite values")
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = z ** 2
    out[..., 1::2] = np.sign(z)
    return out


def square_sign_inverse(x: np.ndarray) -> np.ndarray:
    """Left inverse of square_sign: z_j = sign-component * sqrt(square-component).

    Raises on negative square components (not in the image of square_sign).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] % 2 != 0:
        raise ValueError("input width must be even")
    squares = x[..., 0::2]
    signs = x[..., 1::2]
    if np.any(squares < 0):
        raise ValueError("square components must be nonnegative")
    return signs * np.sqrt(squares)


def generate_square_sign_dataset(system: LatentSystem, m: int,
                                 seed: int = 0) -> TimeSeriesDataset:
    """Simulate the latent system and observe through the Square-Sign map;
    the true latents are retained for oracle metrics."""
    latent_data = simulate(system, m, seed)
    x = square_sign(latent_data.latents)
    return TimeSeriesDataset(x=x, y=latent_data.y, latents=latent_data.latents)
