"""Random-search hyperparameter tuning with k-fold cross-validation.

A trainer is any callable (params, train_data) -> fitted model exposing
predict(); draws are scored by mean validation R^2 across folds. A trainer
failure on a draw scores that draw -inf and the search continues.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .dgp import TimeSeriesDataset
from .metrics import r2
from .seeding import stream_rng

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class HyperRange:
    """One tunable parameter: bounds, sampling scale and integrality."""

    name: str
    lower: float
    upper: float
    scale: str = "linear"          # "linear" or "log"
    integer: bool = False

    def __post_init__(self):
        if self.lower >= self.upper:
            raise ValueError(
                f"{self.name}: lower bound must be below upper "
                f"({self.lower} >= {self.upper})"
            )
        if self.scale not in ("linear", "log"):
            raise ValueError(f"{self.name}: unknown scale {self.scale!r}")
        if self.scale == "log" and self.lower <= 0:
            raise ValueError(f"{self.name}: log scale requires lower > 0")

    def draw(self, rng: np.random.Generator):
        if self.scale == "log":
            value = float(np.exp(rng.uniform(np.log(self.lower),
                                             np.log(self.upper))))
        else:
            value = float(rng.uniform(self.lower, self.upper))
        if self.integer:
            low = max(1, int(np.round(self.lower)))
            high = max(low, int(np.floor(self.upper)))
            return int(np.clip(int(np.round(value)), low, high))
        return value


def kfold_split(m: int, k_folds: int, seed: int = 0):
    """Disjoint, exhaustive folds from a seeded shuffle; sizes differ by at
    most one. Returns a list of (train_indices, val_indices) pairs."""
    if k_folds < 2:
        raise ValueError("k_folds must be >= 2")
    if m < k_folds:
        raise ValueError(f"cannot split {m} samples into {k_folds} folds")
    rng = stream_rng(seed, "kfold")
    order = rng.permutation(m)
    folds = np.array_split(order, k_folds)
    splits = []
    for i, val_idx in enumerate(folds):
        train_idx = np.concatenate([f for j, f in enumerate(folds) if j != i])
        splits.append((train_idx, val_idx))
    return splits


def _subset(data: TimeSeriesDataset, idx) -> TimeSeriesDataset:
    return TimeSeriesDataset(
        x=data.x[idx], y=data.y[idx],
        latents=None if data.latents is None else data.latents[idx],
    )


@dataclass(eq=False)
class SearchResult:
    best_params: dict
    best_score: float
    table: list[dict] = field(default_factory=list)


def random_search(trainer, data: TimeSeriesDataset, ranges: list[HyperRange],
                  n_draws: int, k_folds: int = 5, seed: int = 0) -> SearchResult:
    """Draw n_draws configurations uniformly on each range (in its scale),
    score each by mean validation R^2 over the folds, and return the argmax
    (ties broken by first draw). Retraining the winner on the full data is
    the caller's job."""
    if n_draws < 1:
        raise ValueError("n_draws must be >= 1")
    draw_rng = stream_rng(seed, "draws")
    splits = kfold_split(data.n_samples, k_folds, seed=seed)

    table: list[dict] = []
    for draw in range(n_draws):
        params = {r.name: r.draw(draw_rng) for r in ranges}
        fold_scores: list[float] = []
        failed = False
        for train_idx, val_idx in splits:
            try:
                model = trainer(params, _subset(data, train_idx))
                pred = model.predict(data.x[val_idx, 0, :])
                fold_scores.append(r2(data.y[val_idx], pred))
            except Exception as exc:
                log.warning("draw %d failed in a fold: %s", draw, exc)
                failed = True
                break
        mean_score = -np.inf if failed else float(np.mean(fold_scores))
        table.append({
            "draw": draw,
            "params": params,
            "fold_scores": fold_scores if not failed else [],
            "mean_score": mean_score,
            "failed": failed,
        })

    best = max(table, key=lambda row: (row["mean_score"], -row["draw"]))
    return SearchResult(best_params=best["params"],
                        best_score=best["mean_score"], table=table)
