"""File formats: dataset CSV, fitted-model JSON, result tables and run
manifests.

Dataset CSV contract: one row per series; feature columns are named
``t{step}_f{feature}`` with both indices 1-based, outcome columns ``y{l}``
with l 1-based. Floats are written with 17 significant digits so files
round-trip bit-exactly. True latents are not serialized.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from . import __version__
from .dgp import TimeSeriesDataset
from .estimators import (
    GaussianKernel,
    KernelPredictor,
    LinearKernel,
    LinearPredictor,
)
from .features import (
    FeatureMap,
    IdentityMap,
    LinearTransformMap,
    RffMap,
    RrfMap,
    SquareSignInverseMap,
)
from .replearn import Objective, RepModel


def fmt(value: float) -> str:
    """17 significant digits: enough to round-trip any float64."""
    return f"{float(value):.17g}"


def write_csv(path, header: list[str], rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([
                fmt(v) if isinstance(v, (float, np.floating)) else v
                for v in row
            ])


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------

def dataset_header(horizon: int, n_features: int, n_outputs: int) -> list[str]:
    cols = [f"t{t}_f{j}" for t in range(1, horizon + 1)
            for j in range(1, n_features + 1)]
    return cols + [f"y{l}" for l in range(1, n_outputs + 1)]


def save_dataset(data: TimeSeriesDataset, path) -> None:
    m, horizon, k = data.x.shape
    header = dataset_header(horizon, k, data.n_outputs)
    flat = np.column_stack([data.x.reshape(m, horizon * k), data.y])
    write_csv(path, header, flat)


def load_dataset(path) -> TimeSeriesDataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        values = np.array([[float(v) for v in row] for row in reader])

    feature_cols = [c for c in header if c.startswith("t")]
    outcome_cols = [c for c in header if c.startswith("y")]
    if not feature_cols or not outcome_cols:
        raise ValueError(f"{path}: header does not follow the t*_f*/y* contract")
    steps = sorted({int(c.split("_")[0][1:]) for c in feature_cols})
    horizon = max(steps)
    k = len(feature_cols) // horizon
    if steps != list(range(1, horizon + 1)) or len(feature_cols) != horizon * k:
        raise ValueError(f"{path}: feature columns do not form a full grid")
    expected = dataset_header(horizon, k, len(outcome_cols))
    if header != expected:
        raise ValueError(f"{path}: columns are not in contract order")

    m = values.shape[0]
    x = values[:, : horizon * k].reshape(m, horizon, k)
    y = values[:, horizon * k:]
    return TimeSeriesDataset(x=x, y=y)


# ---------------------------------------------------------------------------
# Feature maps and fitted models
# ---------------------------------------------------------------------------

def feature_map_to_dict(fmap: FeatureMap) -> dict:
    return {"kind": fmap.kind, **fmap.params()}


def feature_map_from_dict(spec: dict) -> FeatureMap:
    kind = spec["kind"]
    if kind == "identity":
        return IdentityMap(spec["dim"])
    if kind == "square_sign_inverse":
        return SquareSignInverseMap(spec["latent_dim"])
    if kind == "linear":
        base = feature_map_from_dict(spec["base"])
        return LinearTransformMap(base, np.array(spec["matrix"]))
    if kind == "rff":
        return RffMap(spec["input_dim"], spec["output_dim"], spec["gamma"],
                      projection=np.array(spec["projection"]),
                      offsets=np.array(spec["offsets"]))
    if kind == "rrf":
        return RrfMap(spec["input_dim"], spec["output_dim"], spec["gamma"],
                      projection=np.array(spec["projection"]))
    raise ValueError(f"unknown feature map kind {kind!r}")


def model_to_dict(model) -> dict:
    if isinstance(model, LinearPredictor):
        return {
            "type": "linear_predictor",
            "feature_maps": [feature_map_to_dict(f) for f in model.feature_maps],
            "weights": model.weights.tolist(),
        }
    if isinstance(model, KernelPredictor):
        kernel = model.kernel
        if not isinstance(kernel, (LinearKernel, GaussianKernel)):
            raise ValueError("only linear and gaussian kernels serialize")
        return {
            "type": "kernel_predictor",
            "kernel": {"name": kernel.name, **kernel.params()},
            "support_points": model.support_points.tolist(),
            "dual_coefficients": model.dual_coefficients.tolist(),
        }
    if isinstance(model, RepModel):
        return {
            "type": "rep_model",
            "input_dim": model.input_dim,
            "horizon": model.horizon,
            "rep_dim": model.rep_dim,
            "n_outputs": model.n_outputs,
            "objective": {"kind": model.objective.kind, "lam": model.objective.lam},
            "parameters": [p.tolist() for p in model.parameters()],
        }
    raise ValueError(f"cannot serialize model of type {type(model)!r}")


def model_from_dict(spec: dict):
    kind = spec["type"]
    if kind == "linear_predictor":
        maps = tuple(feature_map_from_dict(f) for f in spec["feature_maps"])
        return LinearPredictor(feature_maps=maps,
                               weights=np.array(spec["weights"]))
    if kind == "kernel_predictor":
        kspec = spec["kernel"]
        if kspec["name"] == "linear":
            kernel = LinearKernel()
        elif kspec["name"] == "gaussian":
            kernel = GaussianKernel(kspec["gamma"])
        else:
            raise ValueError(f"unknown kernel {kspec['name']!r}")
        return KernelPredictor(
            kernel=kernel,
            support_points=np.array(spec["support_points"]),
            dual_coefficients=np.array(spec["dual_coefficients"]),
        )
    if kind == "rep_model":
        objective = Objective(spec["objective"]["kind"], spec["objective"]["lam"])
        model = RepModel(
            input_dim=spec["input_dim"], horizon=spec["horizon"],
            rep_dim=spec["rep_dim"], n_outputs=spec["n_outputs"],
            objective=objective, seed=0,
        )
        model.set_parameters([np.array(p) for p in spec["parameters"]])
        return model
    raise ValueError(f"unknown model type {kind!r}")


def save_model(model, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path):
    with open(path) as fh:
        return model_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Result tables, training logs and manifests
# ---------------------------------------------------------------------------

# wall_time goes to a companion file: results.csv must be byte-identical
# across reruns and worker counts, and timings are not.
RESULT_COLUMNS = ["model", "m", "horizon", "repetition", "r2", "failed",
                  "params"]


def write_results_csv(records, path) -> None:
    rows = []
    for rec in records:
        rows.append([
            rec.model, rec.m, rec.horizon, rec.repetition,
            fmt(rec.r2) if np.isfinite(rec.r2) else "nan",
            int(rec.failed),
            json.dumps(rec.params, sort_keys=True),
        ])
    write_csv(path, RESULT_COLUMNS, rows)


def write_timings_csv(records, path) -> None:
    write_csv(path, ["model", "m", "repetition", "wall_time"],
              [[rec.model, rec.m, rec.repetition, fmt(rec.wall_time)]
               for rec in records])


def write_summary_csv(records, path) -> None:
    """Mean and standard deviation of R^2 per (model, m), failures dropped."""
    groups: dict[tuple, list[float]] = {}
    for rec in records:
        if not rec.failed and np.isfinite(rec.r2):
            groups.setdefault((rec.model, rec.m), []).append(rec.r2)
    rows = []
    for (model, m) in sorted(groups):
        scores = groups[(model, m)]
        std = float(np.std(scores, ddof=1)) if len(scores) > 1 else 0.0
        rows.append([model, m, len(scores), float(np.mean(scores)), std])
    write_csv(path, ["model", "m", "n", "r2_mean", "r2_std"], rows)


def write_training_log(log, path) -> None:
    write_csv(path, ["epoch", "train_loss", "val_loss"],
              [[epoch, train, val] for epoch, train, val in log])


def write_cv_table(search_result, path) -> None:
    """Random-search table: one row per draw with its parameters, per-fold
    validation scores and their mean."""
    param_names = sorted({k for row in search_result.table
                          for k in row["params"]})
    n_folds = max((len(row["fold_scores"]) for row in search_result.table),
                  default=0)
    header = (["draw"] + param_names
              + [f"fold_{i + 1}" for i in range(n_folds)]
              + ["mean_score", "failed"])
    rows = []
    for row in search_result.table:
        scores = list(row["fold_scores"])
        scores += [""] * (n_folds - len(scores))
        rows.append(
            [row["draw"]]
            + [row["params"].get(name, "") for name in param_names]
            + scores
            + [row["mean_score"] if np.isfinite(row["mean_score"]) else "-inf",
               int(row["failed"])]
        )
    write_csv(path, header, rows)


def write_manifest(out_dir, command: str, config: dict, seed) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    # No timestamp: reruns of the same (config, seed) must be byte-identical.
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "library_version": __version__,
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
