"""Adam training with validation-based early stopping, plus the
teacher-student distillation baseline."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..seeding import stream_rng, stream_seed
from .mlp import Mlp
from .model import Batch, Objective, RepModel, loss_and_grads

TEACHER_HIDDEN = (100, 100, 100, 100, 100)


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 30
    max_epochs: int = 1500
    patience: int = 200
    validation_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("learning_rate, batch_size and max_epochs must be positive")
        if self.patience < 0:
            raise ValueError("patience must be >= 0")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must lie in (0, 1)")


class Adam:
    """Adam over a list of parameter arrays (beta1=0.9, beta2=0.999, eps=1e-8)."""

    def __init__(self, params: list[np.ndarray], learning_rate: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = learning_rate
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        correction1 = 1.0 - self.beta1 ** self.t
        correction2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g ** 2
            p -= self.lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)


@dataclass(eq=False)
class TrainResult:
    model: RepModel
    log: list[tuple[int, float, float]] = field(default_factory=list)
    best_epoch: int = 0
    best_val_loss: float = np.inf

    @property
    def epochs_run(self) -> int:
        return len(self.log)


def split_train_validation(n: int, validation_fraction: float, seed: int):
    """Seeded shuffle; the last fraction of the permutation is validation."""
    rng = stream_rng(seed, "val-split")
    order = rng.permutation(n)
    n_val = int(round(n * validation_fraction))
    n_val = min(max(n_val, 1), n - 1) if n > 1 else 0
    return order[: n - n_val], order[n - n_val:]


def _run_training(loss_grad_fn, get_params, set_params, copy_params,
                  n_train: int, config: TrainConfig, val_loss_fn):
    """Shared minibatch loop: Adam, per-epoch shuffles, best-checkpoint
    restore, patience-based early stopping."""
    optimizer = Adam(get_params(), config.learning_rate)
    shuffle_rng = stream_rng(config.seed, "epoch-shuffles")
    batch_size = min(config.batch_size, n_train)

    log: list[tuple[int, float, float]] = []
    best_val = np.inf
    best_epoch = 0
    best_params = copy_params()

    for epoch in range(1, config.max_epochs + 1):
        order = shuffle_rng.permutation(n_train)
        epoch_losses = []
        for start in range(0, n_train, batch_size):
            idx = order[start:start + batch_size]
            loss, grads = loss_grad_fn(idx)
            optimizer.step(grads)
            epoch_losses.append(loss)
        val_loss = val_loss_fn()
        log.append((epoch, float(np.mean(epoch_losses)), float(val_loss)))
        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            best_params = copy_params()
        if epoch - best_epoch >= config.patience:
            break

    set_params(best_params)
    return log, best_epoch, best_val


def train(model: RepModel, data: Batch, config: TrainConfig,
          objective: Objective | None = None) -> TrainResult:
    """Fit a RepModel by minibatch Adam with early stopping.

    The data is split into train/validation by config.validation_fraction
    (seeded shuffle, last block is validation); the returned model carries
    the parameters of the epoch with the lowest validation loss.
    """
    if objective is None:
        objective = model.objective
    train_idx, val_idx = split_train_validation(
        len(data), config.validation_fraction, config.seed
    )
    if train_idx.size < 1 or val_idx.size < 1:
        raise ValueError("train/validation split is empty; need more rows")
    train_data = data.take(train_idx)
    val_data = data.take(val_idx)

    def loss_grad_fn(idx):
        loss, grads = loss_and_grads(model, train_data.take(idx), objective)
        return loss, grads.as_list()

    def val_loss_fn():
        return loss_and_grads(model, val_data, objective, compute_grads=False)[0]

    log, best_epoch, best_val = _run_training(
        loss_grad_fn, model.parameters, model.set_parameters,
        model.copy_parameters, len(train_data), config, val_loss_fn,
    )
    return TrainResult(model=model, log=log, best_epoch=best_epoch,
                       best_val_loss=best_val)


# ---------------------------------------------------------------------------
# Generalized distillation
# ---------------------------------------------------------------------------

class TeacherModel:
    """MLP regressor on the concatenation of all time steps."""

    def __init__(self, input_dim: int, horizon: int, n_outputs: int, seed: int = 0):
        self.horizon = horizon
        self.input_dim = input_dim
        self.net = Mlp([horizon * input_dim, *TEACHER_HIDDEN, n_outputs],
                       seed=stream_seed(seed, "teacher"))

    def _flatten(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return x.reshape(x.shape[0], self.horizon * self.input_dim)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.net.forward(self._flatten(x))


def train_teacher(data: Batch, config: TrainConfig, seed: int = 0) -> TeacherModel:
    """Fit the all-steps teacher by mean squared error with the same
    optimizer and early-stopping contract as the representation learners."""
    teacher = TeacherModel(data.x.shape[2], data.x.shape[1],
                           data.y.shape[1], seed=seed)
    features = teacher._flatten(data.x)
    targets = data.y
    train_idx, val_idx = split_train_validation(
        len(data), config.validation_fraction, config.seed
    )
    if train_idx.size < 1 or val_idx.size < 1:
        raise ValueError("train/validation split is empty; need more rows")
    f_train, y_train = features[train_idx], targets[train_idx]
    f_val, y_val = features[val_idx], targets[val_idx]
    net = teacher.net

    def loss_grad_fn(idx):
        out, cache = net.forward_cached(f_train[idx])
        residual = out - y_train[idx]
        loss = float(np.sum(residual ** 2)) / len(idx)
        gw, gb = net.backward(cache, 2.0 / len(idx) * residual)
        return loss, gw + gb

    def val_loss_fn():
        out = net.forward(f_val)
        return float(np.sum((out - y_val) ** 2)) / max(len(f_val), 1)

    _run_training(loss_grad_fn, net.parameters, net.set_parameters,
                  net.copy_parameters, len(f_train), config, val_loss_fn)
    return teacher


@dataclass(eq=False)
class DistillationResult:
    student: RepModel
    teacher: TeacherModel
    student_log: list[tuple[int, float, float]]


def fit_distillation(data: Batch, teacher_config: TrainConfig,
                     student_config: TrainConfig, lam: float,
                     rep_dim: int = 25, seed: int = 0) -> DistillationResult:
    """Train the all-steps teacher, then a classic-shaped student on the
    baseline step against the lambda-mix of outcomes and teacher targets."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    teacher = train_teacher(data, teacher_config, seed=stream_seed(seed, "t"))
    soft_targets = teacher.predict(data.x)

    objective = Objective("distill", lam)
    student = RepModel(
        input_dim=data.x.shape[2], horizon=data.x.shape[1], rep_dim=rep_dim,
        n_outputs=data.y.shape[1], objective=objective,
        seed=stream_seed(seed, "s"),
    )
    student_data = Batch(x=data.x, y=data.y, teacher=soft_targets)
    result = train(student, student_data, student_config, objective)
    return DistillationResult(student=student, teacher=teacher,
                              student_log=result.log)
