"""Representation-learning models over a shared MLP encoder.

A RepModel couples the encoder with per-step linear parts:

- "srl": transition matrices between consecutive embedded steps plus a final
  outcome head; prediction composes the chain from the baseline embedding.
- "crl": per-step outcome heads and transition matrices, traded off by
  lambda; prediction uses the baseline head only.
- "grl": per-step outcome heads with weight lambda on the baseline step and
  1 - lambda elsewhere; prediction uses the baseline head only.
- "classic": a single head on the baseline embedding, nothing privileged.
- "distill": classic-shaped model trained against a lambda-mix of the true
  outcomes and a teacher's predictions.

Losses and their analytic gradients are computed together in one pass so the
public loss functions and backward() can never drift apart.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..seeding import stream_rng, stream_seed
from .mlp import Mlp

OBJECTIVE_KINDS = ("srl", "crl", "grl", "classic", "distill")
ENCODER_HIDDEN = (25, 25, 25)


@dataclass(frozen=True)
class Objective:
    """Which loss to optimize, with its trade-off parameter where one exists."""

    kind: str
    lam: float | None = None

    def __post_init__(self):
        if self.kind not in OBJECTIVE_KINDS:
            raise ValueError(f"unknown objective kind {self.kind!r}")
        if self.kind == "crl":
            if self.lam is None or not 0.0 <= self.lam <= 1.0:
                raise ValueError("crl requires lambda in [0, 1]")
        if self.kind == "grl":
            if self.lam is None or not 0.0 < self.lam < 1.0:
                raise ValueError("grl requires lambda in (0, 1)")
        if self.kind == "distill":
            if self.lam is None or not 0.0 <= self.lam <= 1.0:
                raise ValueError("distill requires lambda in [0, 1]")


@dataclass(eq=False)
class Batch:
    """Training rows: sequences, outcomes and (for distillation) the
    teacher's predictions aligned row-for-row."""

    x: np.ndarray                     # (n, T, k)
    y: np.ndarray                     # (n, q)
    teacher: np.ndarray | None = None  # (n, q)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.x.ndim != 3 or self.y.ndim != 2:
            raise ValueError("x must be (n, T, k) and y must be (n, q)")
        if self.x.shape[0] != self.y.shape[0]:
            raise ValueError("x and y disagree on the number of rows")
        if self.teacher is not None:
            self.teacher = np.asarray(self.teacher, dtype=np.float64)
            if self.teacher.shape != self.y.shape:
                raise ValueError("teacher predictions must match y's shape")

    def __len__(self) -> int:
        return self.x.shape[0]

    def take(self, idx) -> "Batch":
        return Batch(
            x=self.x[idx], y=self.y[idx],
            teacher=None if self.teacher is None else self.teacher[idx],
        )


@dataclass(eq=False)
class Grads:
    """Gradient arrays mirroring RepModel.parameters() order."""

    encoder_w: list[np.ndarray]
    encoder_b: list[np.ndarray]
    transitions: list[np.ndarray] = field(default_factory=list)
    heads: list[np.ndarray] = field(default_factory=list)
    beta: np.ndarray | None = None

    def as_list(self) -> list[np.ndarray]:
        out = list(self.encoder_w) + list(self.encoder_b)
        out += list(self.transitions) + list(self.heads)
        if self.beta is not None:
            out.append(self.beta)
        return out


class RepModel:
    """Shared encoder plus the linear parts required by the objective."""

    def __init__(self, input_dim: int, horizon: int, rep_dim: int,
                 n_outputs: int, objective: Objective, seed: int = 0):
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        if objective.kind == "crl" and horizon < 2 and objective.lam < 1.0:
            raise ValueError(
                "crl with lambda < 1 needs at least 2 time steps "
                "(the transition term normalizes by T - 1)"
            )
        self.input_dim = input_dim
        self.horizon = horizon
        self.rep_dim = rep_dim
        self.n_outputs = n_outputs
        self.objective = objective
        self.encoder = Mlp([input_dim, *ENCODER_HIDDEN, rep_dim],
                           seed=stream_seed(seed, "encoder"))

        rng = stream_rng(seed, "linear-parts")

        def glorot(shape):
            bound = np.sqrt(6.0 / (shape[0] + shape[1]))
            return rng.uniform(-bound, bound, size=shape)

        self.transitions: list[np.ndarray] = []
        self.heads: list[np.ndarray] = []
        self.beta: np.ndarray | None = None
        if objective.kind == "srl":
            self.transitions = [glorot((rep_dim, rep_dim))
                                for _ in range(horizon - 1)]
            self.beta = glorot((rep_dim, n_outputs))
        elif objective.kind == "crl":
            self.transitions = [glorot((rep_dim, rep_dim))
                                for _ in range(horizon - 1)]
            self.heads = [glorot((rep_dim, n_outputs)) for _ in range(horizon)]
        elif objective.kind == "grl":
            self.heads = [glorot((rep_dim, n_outputs)) for _ in range(horizon)]
        else:  # classic, distill
            self.heads = [glorot((rep_dim, n_outputs))]

    # -- parameter plumbing -------------------------------------------------

    def parameters(self) -> list[np.ndarray]:
        out = self.encoder.parameters() + list(self.transitions) + list(self.heads)
        if self.beta is not None:
            out.append(self.beta)
        return out

    def copy_parameters(self) -> list[np.ndarray]:
        return [p.copy() for p in self.parameters()]

    def set_parameters(self, params: list[np.ndarray]) -> None:
        own = self.parameters()
        if len(params) != len(own):
            raise ValueError(f"expected {len(own)} arrays, got {len(params)}")
        for dst, src in zip(own, params):
            dst[...] = src

    # -- prediction ---------------------------------------------------------

    def predict(self, x1: np.ndarray) -> np.ndarray:
        """Predict outcomes from baseline inputs only."""
        x1 = np.asarray(x1, dtype=np.float64)
        if x1.ndim == 1:
            x1 = x1[None, :]
        phi = self.encoder.forward(x1)
        if self.objective.kind == "srl":
            weights = self.beta
            for a in reversed(self.transitions):
                weights = a @ weights
            return phi @ weights
        return phi @ self.heads[0]

    def encode(self, x: np.ndarray) -> np.ndarray:
        """The learned representation of a batch of single-step inputs."""
        return self.encoder.forward(np.asarray(x, dtype=np.float64))


# ---------------------------------------------------------------------------
# Losses and analytic gradients
# ---------------------------------------------------------------------------

def _encode_steps(model: RepModel, x: np.ndarray, n_steps: int):
    """Run the encoder over the first n_steps of every sequence in one pass.

    Returns phi of shape (n, n_steps, rep_dim) and the cache for backward.
    """
    n = x.shape[0]
    flat = x[:, :n_steps, :].reshape(n * n_steps, model.input_dim)
    phi_flat, cache = model.encoder.forward_cached(flat)
    return phi_flat.reshape(n, n_steps, model.rep_dim), cache


def loss_and_grads(model: RepModel, batch: Batch, objective: Objective,
                   compute_grads: bool = True):
    """Objective value and (optionally) exact gradients for every parameter.

    The encoder gradient accumulates contributions from all time steps, since
    the representation is shared across them.
    """
    kind = objective.kind
    n = len(batch)
    horizon = model.horizon
    d_hat = model.rep_dim
    q = model.n_outputs
    y = batch.y

    if kind == "crl" and horizon < 2 and objective.lam < 1.0:
        raise ValueError("crl with lambda < 1 requires at least 2 time steps")
    if kind == "distill" and batch.teacher is None:
        raise ValueError("distillation requires teacher predictions on the batch")

    n_steps = 1 if kind in ("classic", "distill") else horizon
    if batch.x.shape[1] < n_steps:
        raise ValueError(
            f"batch provides {batch.x.shape[1]} steps, objective needs {n_steps}"
        )
    phi, cache = _encode_steps(model, batch.x, n_steps)
    dphi = np.zeros_like(phi) if compute_grads else None

    grads = None
    if compute_grads:
        grads = Grads(
            encoder_w=[], encoder_b=[],
            transitions=[np.zeros_like(a) for a in model.transitions],
            heads=[np.zeros_like(h) for h in model.heads],
            beta=None if model.beta is None else np.zeros_like(model.beta),
        )

    loss = 0.0

    if kind == "srl":
        trans_coef = 1.0 / (n * horizon * d_hat)
        for t, a in enumerate(model.transitions):
            residual = phi[:, t, :] @ a - phi[:, t + 1, :]
            loss += trans_coef * float(np.sum(residual ** 2))
            if compute_grads:
                grads.transitions[t] += 2.0 * trans_coef * (phi[:, t, :].T @ residual)
                dphi[:, t, :] += 2.0 * trans_coef * (residual @ a.T)
                dphi[:, t + 1, :] -= 2.0 * trans_coef * residual
        out_coef = 1.0 / (n * horizon * q)
        residual = phi[:, -1, :] @ model.beta - y
        loss += out_coef * float(np.sum(residual ** 2))
        if compute_grads:
            grads.beta += 2.0 * out_coef * (phi[:, -1, :].T @ residual)
            dphi[:, -1, :] += 2.0 * out_coef * (residual @ model.beta.T)

    elif kind == "crl":
        lam = objective.lam
        out_coef = lam / (n * horizon * q)
        for t, head in enumerate(model.heads):
            residual = phi[:, t, :] @ head - y
            loss += out_coef * float(np.sum(residual ** 2))
            if compute_grads:
                grads.heads[t] += 2.0 * out_coef * (phi[:, t, :].T @ residual)
                dphi[:, t, :] += 2.0 * out_coef * (residual @ head.T)
        if horizon > 1:
            trans_coef = (1.0 - lam) / (n * (horizon - 1) * d_hat)
            for t, a in enumerate(model.transitions):
                residual = phi[:, t, :] @ a - phi[:, t + 1, :]
                loss += trans_coef * float(np.sum(residual ** 2))
                if compute_grads:
                    grads.transitions[t] += (
                        2.0 * trans_coef * (phi[:, t, :].T @ residual)
                    )
                    dphi[:, t, :] += 2.0 * trans_coef * (residual @ a.T)
                    dphi[:, t + 1, :] -= 2.0 * trans_coef * residual

    elif kind == "grl":
        lam = objective.lam
        base_coef = 1.0 / (n * horizon)
        for t, head in enumerate(model.heads):
            weight = lam if t == 0 else 1.0 - lam
            coef = base_coef * weight
            residual = phi[:, t, :] @ head - y
            loss += coef * float(np.sum(residual ** 2))
            if compute_grads:
                grads.heads[t] += 2.0 * coef * (phi[:, t, :].T @ residual)
                dphi[:, t, :] += 2.0 * coef * (residual @ head.T)

    elif kind == "classic":
        coef = 1.0 / n
        residual = phi[:, 0, :] @ model.heads[0] - y
        loss += coef * float(np.sum(residual ** 2))
        if compute_grads:
            grads.heads[0] += 2.0 * coef * (phi[:, 0, :].T @ residual)
            dphi[:, 0, :] += 2.0 * coef * (residual @ model.heads[0].T)

    else:  # distill
        lam = objective.lam
        pred = phi[:, 0, :] @ model.heads[0]
        res_y = pred - y
        res_teacher = pred - batch.teacher
        loss += lam / n * float(np.sum(res_y ** 2))
        loss += (1.0 - lam) / n * float(np.sum(res_teacher ** 2))
        if compute_grads:
            dpred = 2.0 * lam / n * res_y + 2.0 * (1.0 - lam) / n * res_teacher
            grads.heads[0] += phi[:, 0, :].T @ dpred
            dphi[:, 0, :] += dpred @ model.heads[0].T

    if compute_grads:
        flat_dphi = dphi.reshape(n * n_steps, d_hat)
        grads.encoder_w, grads.encoder_b = model.encoder.backward(cache, flat_dphi)

    return loss, grads


def loss_srl(model: RepModel, batch: Batch) -> float:
    return loss_and_grads(model, batch, Objective("srl"), compute_grads=False)[0]


def loss_crl(model: RepModel, batch: Batch, lam: float) -> float:
    objective = Objective("crl", lam)
    return loss_and_grads(model, batch, objective, compute_grads=False)[0]


def loss_grl(model: RepModel, batch: Batch, lam: float) -> float:
    objective = Objective("grl", lam)
    return loss_and_grads(model, batch, objective, compute_grads=False)[0]


def loss_classic_rep(model: RepModel, batch: Batch) -> float:
    return loss_and_grads(model, batch, Objective("classic"), compute_grads=False)[0]


def loss_distillation(model: RepModel, batch: Batch, lam: float) -> float:
    objective = Objective("distill", lam)
    return loss_and_grads(model, batch, objective, compute_grads=False)[0]


def backward(model: RepModel, batch: Batch, objective: Objective) -> Grads:
    """Exact gradients of the objective w.r.t. every model parameter."""
    return loss_and_grads(model, batch, objective, compute_grads=True)[1]
