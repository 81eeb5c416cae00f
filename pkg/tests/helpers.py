"""Shared test utilities: relative gaps, exact sign-test tails, and the
finite-difference gradient oracle."""

import math

import numpy as np

from lupts.replearn import loss_and_grads


def relative_gap(a: np.ndarray, b: np.ndarray) -> float:
    """Max absolute difference scaled by the larger magnitude present."""
    scale = max(np.abs(a).max(), np.abs(b).max(), 1e-12)
    return float(np.abs(np.asarray(a) - np.asarray(b)).max() / scale)


def sign_test_pvalue(wins: int, n: int) -> float:
    """One-sided exact binomial tail P[Bin(n, 1/2) >= wins]."""
    if n == 0:
        return 1.0
    return sum(math.comb(n, k) for k in range(wins, n + 1)) / 2.0 ** n


def max_relative_gradient_error(model, batch, objective, n_probes=50,
                                h=1e-6, seed=0):
    """Central finite differences on randomly probed parameter entries."""
    _, grads = loss_and_grads(model, batch, objective)
    grad_list = grads.as_list()
    params = model.parameters()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_probes):
        pi = int(rng.integers(len(params)))
        p = params[pi]
        idx = np.unravel_index(int(rng.integers(p.size)), p.shape)
        original = p[idx]
        p[idx] = original + h
        up = loss_and_grads(model, batch, objective, compute_grads=False)[0]
        p[idx] = original - h
        down = loss_and_grads(model, batch, objective, compute_grads=False)[0]
        p[idx] = original
        numeric = (up - down) / (2.0 * h)
        analytic = grad_list[pi][idx]
        scale = max(abs(numeric), abs(analytic), 1e-8)
        worst = max(worst, abs(numeric - analytic) / scale)
    return worst


def grouped_prediction_variances(preds: np.ndarray, n_groups: int = 10):
    """Per-group prediction-variance estimates from a (reps, n, q) stack;
    groups are consecutive blocks of repetitions."""
    n_reps = preds.shape[0]
    size = n_reps // n_groups
    if size < 2:
        raise ValueError("need at least 2 repetitions per group")
    return np.array([
        float(np.mean(preds[g * size:(g + 1) * size].var(axis=0, ddof=1)))
        for g in range(n_groups)
    ])
