"""Dense linear-algebra kernel: pseudo-inverse, least squares, norm-constrained
least squares, PCA and CCA.

All routines are pure functions of float64 arrays and are safe to call from
any number of concurrent workers. The pseudo-inverse uses a full SVD with the
relative cutoff rcond = max(m, n) * machine-epsilon unless overridden.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_EPS = np.finfo(np.float64).eps


def _as_matrix(a, name: str = "a") -> np.ndarray:
    """Coerce to a 2-D float64 array and reject non-finite entries."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError(f"`{name}` must be 2-D, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"`{name}` must be nonempty, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"`{name}` contains non-finite entries")
    return a


@dataclass(frozen=True, eq=False)
class SvdFactors:
    """Thin SVD factors: u @ diag(s) @ vt reconstructs the input, s is
    nonincreasing and nonnegative, and u, vt have orthonormal columns/rows."""

    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.s) @ self.vt


def svd_factors(a) -> SvdFactors:
    """Thin SVD of a general matrix (the decomposition behind pinv)."""
    u, s, vt = _svd_economy(_as_matrix(a))
    return SvdFactors(u=u, s=s, vt=vt)


def _svd_economy(a: np.ndarray):
    """Thin SVD; falls back to the symmetric eigenproblem of the smaller
    normal matrix when LAPACK's gesdd fails to converge (rare, only on very
    ill-conditioned input whose small singular values are noise anyway)."""
    try:
        return np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError:
        m, n = a.shape
        if m >= n:
            w, v = np.linalg.eigh(a.T @ a)
            w, v = w[::-1], v[:, ::-1]
            s = np.sqrt(np.clip(w, 0.0, None))
            u = np.zeros((m, n))
            nz = s > 0
            u[:, nz] = (a @ v[:, nz]) / s[nz]
            return u, s, v.T
        w, u = np.linalg.eigh(a @ a.T)
        w, u = w[::-1], u[:, ::-1]
        s = np.sqrt(np.clip(w, 0.0, None))
        vt = np.zeros((m, n))
        nz = s > 0
        vt[nz, :] = (u[:, nz].T @ a) / s[nz, None]
        return u, s, vt


def pinv(a, rcond: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudo-inverse via full SVD.

    Singular values sigma_i <= rcond * sigma_max are treated as zero.

    Parameters
    ----------
    a : array_like, shape (m, n)
    rcond : float, optional
        Relative cutoff. Defaults to max(m, n) * machine-epsilon.

    Returns
    -------
    ndarray, shape (n, m)
        A matrix satisfying the four Penrose conditions within numerical
        tolerance.
    """
    a = _as_matrix(a)
    if rcond is None:
        rcond = max(a.shape) * _EPS
    u, s, vt = _svd_economy(a)
    cutoff = rcond * (s[0] if s.size else 0.0)
    inv_s = np.where(s > cutoff, 1.0 / np.where(s > cutoff, s, 1.0), 0.0)
    return (vt.T * inv_s) @ u.T


def lstsq(a, b) -> np.ndarray:
    """Minimum-norm least-squares solution of a @ theta ~ b.

    Equals pinv(a.T @ a) @ a.T @ b, but is computed as pinv(a) @ b: the
    identity pinv(a.T a) a.T = pinv(a) holds exactly, and skipping the
    normal matrix avoids squaring the condition number.

    Parameters
    ----------
    a : array_like, shape (m, n)
    b : array_like, shape (m,) or (m, q)

    Returns
    -------
    ndarray, shape (n, q) (or (n, 1) for vector b)
    """
    a = _as_matrix(a)
    b = _as_matrix(b, "b")
    if a.shape[0] != b.shape[0]:
        raise ValueError(
            f"row mismatch: a has {a.shape[0]} rows, b has {b.shape[0]}"
        )
    return pinv(a) @ b


def norm_constrained_lstsq(a, b, radius: float, rel_tol: float = 1e-8,
                           max_iter: int = 100) -> np.ndarray:
    """Least squares restricted to the Euclidean ball of the given radius.

    Returns argmin ||a @ theta - b||^2 subject to ||theta||_2 <= radius.
    If the minimum-norm unconstrained solution already satisfies the
    constraint it is returned unchanged; otherwise the ridge solution
    theta(lam) = (a.T a + lam I)^-1 a.T b is traced by bisection on lam
    until ||theta(lam)|| equals the radius within `rel_tol` relative.

    Parameters
    ----------
    a : array_like, shape (m, n)
    b : array_like, shape (m,) or (m, 1)
    radius : float
        Positive constraint radius.

    Returns
    -------
    ndarray, shape (n,)
    """
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    a = _as_matrix(a)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.shape[0] != b.shape[0]:
        raise ValueError(
            f"row mismatch: a has {a.shape[0]} rows, b has {b.shape[0]}"
        )

    gram = a.T @ a
    atb = a.T @ b
    theta = pinv(gram) @ atb
    if np.linalg.norm(theta) <= radius:
        return theta

    eye = np.eye(a.shape[1])

    def ridge_norm(lam: float) -> tuple[np.ndarray, float]:
        th = np.linalg.solve(gram + lam * eye, atb)
        return th, float(np.linalg.norm(th))

    # Bracket: the ridge path norm is decreasing in lam; double lam_hi until
    # the norm drops below radius.
    lam_lo = 0.0
    lam_hi = 1.0
    theta_hi, norm_hi = ridge_norm(lam_hi)
    while norm_hi > radius:
        lam_hi *= 2.0
        theta_hi, norm_hi = ridge_norm(lam_hi)

    theta_best = theta_hi
    for _ in range(max_iter):
        lam_mid = 0.5 * (lam_lo + lam_hi)
        theta_mid, norm_mid = ridge_norm(lam_mid)
        if norm_mid > radius:
            lam_lo = lam_mid
        else:
            lam_hi = lam_mid
            theta_best = theta_mid
        if abs(norm_mid - radius) <= rel_tol * radius:
            return theta_mid
    return theta_best


@dataclass(frozen=True)
class PcaResult:
    """Principal directions, projected data and the retained-variance trace."""

    components: np.ndarray        # (n_components, n_features), rows = directions
    projected: np.ndarray         # (n_samples, n_components)
    explained_variance_ratio: np.ndarray
    degenerate: bool = False      # True when the input had zero variance


def pca(x, variance_retained: float) -> PcaResult:
    """Center columns and keep the smallest number of principal directions
    whose cumulative variance fraction reaches `variance_retained`.

    A zero-variance input yields a single zero component flagged degenerate.
    """
    if not 0.0 < variance_retained <= 1.0:
        raise ValueError(
            f"variance_retained must lie in (0, 1], got {variance_retained}"
        )
    x = _as_matrix(x, "x")
    if x.shape[0] < 2:
        raise ValueError("pca requires at least 2 rows")

    centered = x - x.mean(axis=0)
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    var = s ** 2
    total = var.sum()
    if total <= 0.0:
        n = x.shape[0]
        return PcaResult(
            components=np.zeros((1, x.shape[1])),
            projected=np.zeros((n, 1)),
            explained_variance_ratio=np.zeros(1),
            degenerate=True,
        )

    ratio = var / total
    k = int(np.searchsorted(np.cumsum(ratio), variance_retained - 1e-12) + 1)
    k = min(k, len(s))
    components = vt[:k]
    return PcaResult(
        components=components,
        projected=centered @ components.T,
        explained_variance_ratio=ratio[:k],
    )


def _whitener(cov: np.ndarray, rcond: float | None = None) -> np.ndarray:
    """Pseudo-inverse square root of a symmetric PSD matrix."""
    if rcond is None:
        rcond = cov.shape[0] * _EPS
    w, v = np.linalg.eigh(cov)
    w = np.clip(w, 0.0, None)
    cutoff = rcond * (w[-1] if w.size else 0.0)
    inv_sqrt = np.where(w > cutoff, 1.0 / np.sqrt(np.where(w > cutoff, w, 1.0)), 0.0)
    return (v * inv_sqrt) @ v.T


def cca(x, y) -> np.ndarray:
    """Canonical correlations between two views, sorted nonincreasing.

    Both views are centered, whitened with pseudo-inverse square roots of
    their within-set covariances (rank-deficient views are tolerated), and
    the singular values of the whitened cross-covariance are clipped to
    [0, 1].

    Returns
    -------
    ndarray, shape (min(x.cols, y.cols),)
    """
    x = _as_matrix(x, "x")
    y = _as_matrix(y, "y")
    if x.shape[0] != y.shape[0]:
        raise ValueError(
            f"row mismatch: x has {x.shape[0]} rows, y has {y.shape[0]}"
        )

    n = x.shape[0]
    xc = x - x.mean(axis=0)
    yc = y - y.mean(axis=0)
    cxx = xc.T @ xc / (n - 1)
    cyy = yc.T @ yc / (n - 1)
    cxy = xc.T @ yc / (n - 1)

    m = _whitener(cxx) @ cxy @ _whitener(cyy)
    s = np.linalg.svd(m, compute_uv=False)
    k = min(x.shape[1], y.shape[1])
    rho = np.clip(s[:k], 0.0, 1.0)
    if rho.size < k:
        rho = np.pad(rho, (0, k - rho.size))
    return np.sort(rho)[::-1]
