"""Experiment protocol: standardization, model roster, repetition loops over
seeds and sample sizes, the phase-transition and bias-compounding studies,
representation-recovery scoring, and timestamped-CSV sequence assembly.

Every repetition owns a hash-derived seed stream, so records are invariant
to execution order and repetitions can run in a process pool.
"""

from __future__ import annotations

import logging
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import numpy as np

from .dgp import (
    DEFAULT_INIT_STD,
    DEFAULT_SPECTRAL_RADIUS,
    LatentSystem,
    TimeSeriesDataset,
    generate_square_sign_dataset,
    sample_system,
    simulate,
)
from .estimators import fit_classical, fit_consistent_rrf_lupts, fit_lupts
from .features import IdentityMap, RffMap, RrfMap
from .metrics import bias_variance, r2, svcca, true_conditional_mean
from .replearn import Batch, Objective, RepModel, TrainConfig, fit_distillation, train
from .seeding import stream_rng, stream_seed
from .tuning import HyperRange, random_search

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Standardization
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class Standardizer:
    """Per-(step, feature) and per-outcome column means and stds, fit on
    training data only. Zero-variance columns pass through unscaled and are
    flagged constant."""

    x_mean: np.ndarray       # (T, k)
    x_std: np.ndarray        # (T, k), 1.0 where constant
    x_constant: np.ndarray   # (T, k) bool
    y_mean: np.ndarray       # (q,)
    y_std: np.ndarray        # (q,), 1.0 where constant
    y_constant: np.ndarray   # (q,) bool

    @classmethod
    def fit(cls, x: np.ndarray, y: np.ndarray) -> "Standardizer":
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        x_mean = x.mean(axis=0)
        x_std = x.std(axis=0)
        x_constant = x_std == 0.0
        y_mean = y.mean(axis=0)
        y_std = y.std(axis=0)
        y_constant = y_std == 0.0
        return cls(
            x_mean=x_mean, x_std=np.where(x_constant, 1.0, x_std),
            x_constant=x_constant,
            y_mean=y_mean, y_std=np.where(y_constant, 1.0, y_std),
            y_constant=y_constant,
        )

    def transform_x(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return np.where(self.x_constant, x, (x - self.x_mean) / self.x_std)

    def transform_y(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        return np.where(self.y_constant, y, (y - self.y_mean) / self.y_std)

    def inverse_x(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return np.where(self.x_constant, x, x * self.x_std + self.x_mean)

    def inverse_y(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        return np.where(self.y_constant, y, y * self.y_std + self.y_mean)


def standardize_fit(x: np.ndarray, y: np.ndarray) -> Standardizer:
    return Standardizer.fit(x, y)


def standardize_apply(stdzr: Standardizer, x: np.ndarray, y: np.ndarray):
    return stdzr.transform_x(x), stdzr.transform_y(y)


def standardize_invert(stdzr: Standardizer, x: np.ndarray, y: np.ndarray):
    return stdzr.inverse_x(x), stdzr.inverse_y(y)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

CLOSED_FORM_MODELS = ("ols", "lupts", "ols_rff", "lupts_rff",
                      "ols_rrf", "lupts_rrf", "lupts_consistent_rrf")
REP_LEARNER_MODELS = ("classic_rep", "srl", "crl", "grl", "distillation")
ALL_MODELS = CLOSED_FORM_MODELS + REP_LEARNER_MODELS


@dataclass
class DgpConfig:
    kind: str = "square_sign"          # "square_sign" or "linear"
    d: int = 10
    q: int = 3
    horizon: int = 5
    spectral_radius: float = DEFAULT_SPECTRAL_RADIUS
    transition_noise_std: float = 1.0
    outcome_noise_std: float = 1.0
    init_std: float = DEFAULT_INIT_STD

    def __post_init__(self):
        if self.kind not in ("square_sign", "linear"):
            raise ValueError(f"unknown dgp kind {self.kind!r}")

    def sample(self, seed: int) -> LatentSystem:
        return sample_system(
            d=self.d, q=self.q, horizon=self.horizon,
            spectral_radius_target=self.spectral_radius, seed=seed,
            transition_noise_std=self.transition_noise_std,
            outcome_noise_std=self.outcome_noise_std, init_std=self.init_std,
        )

    def generate(self, system: LatentSystem, m: int, seed: int) -> TimeSeriesDataset:
        if self.kind == "square_sign":
            return generate_square_sign_dataset(system, m, seed)
        return simulate(system, m, seed)


@dataclass
class TuningConfig:
    k_folds: int = 5
    n_draws_random_features: int = 10
    n_draws_rep_learners: int = 5
    n_features_fractions: tuple[float, float] = (0.05, 0.8)
    gamma_rff_range: tuple[float, float] = (0.001, 0.1)
    gamma_rrf_range: tuple[float, float] = (0.01, 10.0)
    lambda_range: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        self.n_features_fractions = tuple(self.n_features_fractions)
        self.gamma_rff_range = tuple(self.gamma_rff_range)
        self.gamma_rrf_range = tuple(self.gamma_rrf_range)
        self.lambda_range = tuple(self.lambda_range)


@dataclass
class ExperimentConfig:
    dgp: DgpConfig = field(default_factory=DgpConfig)
    dataset_path: str | None = None    # when set, replaces the synthetic dgp
    test_fraction: float = 0.2         # held-out share for dataset mode
    models: list[str] = field(default_factory=lambda: ["ols", "lupts"])
    sample_sizes: list[int] = field(default_factory=lambda: [100])
    repetitions: int = 1
    base_seed: int = 0
    test_size: int = 1000
    fresh_system_per_repetition: bool = False
    rep_dim: int = 25
    consistent_radius: float = 100.0
    tuning: TuningConfig = field(default_factory=TuningConfig)
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if any(m < 2 for m in self.sample_sizes):
            raise ValueError("sample sizes must be >= 2")
        unknown = [name for name in self.models if name not in ALL_MODELS]
        if unknown:
            raise ValueError(
                f"unknown models {unknown}; available: {list(ALL_MODELS)}"
            )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        raw = dict(raw)
        if "dgp" in raw:
            raw["dgp"] = DgpConfig(**raw["dgp"])
        if "tuning" in raw:
            raw["tuning"] = TuningConfig(**raw["tuning"])
        if "train" in raw:
            raw["train"] = TrainConfig(**raw["train"])
        return cls(**raw)


@dataclass
class ResultRecord:
    model: str
    m: int
    horizon: int
    repetition: int
    r2: float
    wall_time: float
    params: dict = field(default_factory=dict)
    failed: bool = False
    squared_bias: float | None = None
    variance: float | None = None


# ---------------------------------------------------------------------------
# Model roster
# ---------------------------------------------------------------------------

def _n_features_range(m: int, fractions: tuple[float, float]) -> HyperRange:
    lo, hi = fractions[0] * m, fractions[1] * m
    return HyperRange("n_features", lo, max(hi, lo + 1e-9), integer=True)


def tuning_ranges(model: str, m: int,
                  tuning: TuningConfig | None = None) -> list[HyperRange]:
    tuning = tuning or TuningConfig()
    if model in ("ols_rff", "lupts_rff"):
        return [_n_features_range(m, tuning.n_features_fractions),
                HyperRange("gamma", *tuning.gamma_rff_range, scale="log")]
    if model in ("ols_rrf", "lupts_rrf", "lupts_consistent_rrf"):
        return [_n_features_range(m, tuning.n_features_fractions),
                HyperRange("gamma", *tuning.gamma_rrf_range, scale="log")]
    if model in ("crl", "grl", "distillation"):
        return [HyperRange("lambda", *tuning.lambda_range)]
    return []


def tuning_draws(model: str, config: ExperimentConfig) -> int:
    if model in ("ols_rff", "lupts_rff", "ols_rrf", "lupts_rrf",
                 "lupts_consistent_rrf"):
        return config.tuning.n_draws_random_features
    if model in ("crl", "grl", "distillation"):
        return config.tuning.n_draws_rep_learners
    return 1


def _train_config(config: ExperimentConfig, seed: int) -> TrainConfig:
    base = config.train
    return TrainConfig(
        learning_rate=base.learning_rate, batch_size=base.batch_size,
        max_epochs=base.max_epochs, patience=base.patience,
        validation_fraction=base.validation_fraction, seed=seed,
    )


def make_trainer(model: str, config: ExperimentConfig, rep_seed: int):
    """A callable (params, train_data) -> fitted model for the roster entry.

    Random feature maps are realized from a per-repetition stream shared by
    all folds of a draw; representation learners derive their training seed
    from the same stream.
    """
    map_seed = stream_seed(rep_seed, "featmap", model)
    train_seed = stream_seed(rep_seed, "train", model)

    def trainer(params: dict, data: TimeSeriesDataset):
        k = data.n_features
        if model == "ols":
            return fit_classical(data, IdentityMap(k))
        if model == "lupts":
            return fit_lupts(data, IdentityMap(k))
        if model in ("ols_rff", "lupts_rff"):
            fmap = RffMap(k, params["n_features"], params["gamma"], seed=map_seed)
            fit = fit_classical if model == "ols_rff" else fit_lupts
            return fit(data, fmap)
        if model in ("ols_rrf", "lupts_rrf"):
            fmap = RrfMap(k, params["n_features"], params["gamma"], seed=map_seed)
            fit = fit_classical if model == "ols_rrf" else fit_lupts
            return fit(data, fmap)
        if model == "lupts_consistent_rrf":
            widths = [params["n_features"]] * data.horizon
            return fit_consistent_rrf_lupts(
                data, widths, params["gamma"],
                radius=config.consistent_radius, seed=map_seed,
            )
        if model in ("classic_rep", "srl", "crl", "grl"):
            kind = {"classic_rep": "classic"}.get(model, model)
            objective = Objective(kind, params.get("lambda"))
            rep = RepModel(
                input_dim=k, horizon=data.horizon, rep_dim=config.rep_dim,
                n_outputs=data.n_outputs, objective=objective,
                seed=stream_seed(rep_seed, "init", model),
            )
            batch = Batch(x=data.x, y=data.y)
            train(rep, batch, _train_config(config, train_seed), objective)
            return rep
        if model == "distillation":
            batch = Batch(x=data.x, y=data.y)
            result = fit_distillation(
                batch, _train_config(config, stream_seed(train_seed, "teacher")),
                _train_config(config, stream_seed(train_seed, "student")),
                lam=params["lambda"], rep_dim=config.rep_dim,
                seed=stream_seed(rep_seed, "init", model),
            )
            return result.student
        raise ValueError(f"unknown model {model!r}")

    return trainer


# ---------------------------------------------------------------------------
# Experiment loop
# ---------------------------------------------------------------------------

def _fit_tuned_model(model: str, config: ExperimentConfig, rep_seed: int,
                     train_data: TimeSeriesDataset):
    """Random-search CV on the training data, then retrain the winner on all
    of it. Returns (fitted model, winning params)."""
    trainer = make_trainer(model, config, rep_seed)
    ranges = tuning_ranges(model, train_data.n_samples, config.tuning)
    if not ranges:
        return trainer({}, train_data), {}
    search = random_search(
        trainer, train_data, ranges,
        n_draws=tuning_draws(model, config),
        k_folds=config.tuning.k_folds,
        seed=stream_seed(rep_seed, "search", model),
    )
    return trainer(search.best_params, train_data), search.best_params


def _split_real_dataset(config: ExperimentConfig, m: int, repetition: int):
    """Dataset mode: per repetition, a seeded shuffle puts test_fraction of
    all rows aside and the first m of the rest become training data."""
    from .serialize import load_dataset

    data = load_dataset(config.dataset_path)
    n = data.n_samples
    n_test = max(1, int(round(config.test_fraction * n)))
    if m > n - n_test:
        raise ValueError(
            f"m={m} exceeds the {n - n_test} rows available for training"
        )
    order = stream_rng(config.base_seed, "split", m, repetition).permutation(n)
    test_idx, train_idx = order[:n_test], order[n_test:n_test + m]
    return (TimeSeriesDataset(x=data.x[train_idx], y=data.y[train_idx]),
            TimeSeriesDataset(x=data.x[test_idx], y=data.y[test_idx]))


def run_repetition(config: ExperimentConfig, m: int, repetition: int
                   ) -> list[ResultRecord]:
    """One (sample size, repetition) cell: fresh training data, shared or
    per-repetition test set, standardize, tune, retrain, score."""
    base = config.base_seed
    if config.dataset_path is not None:
        train_data, test = _split_real_dataset(config, m, repetition)
        horizon = train_data.horizon
    elif config.fresh_system_per_repetition:
        system = config.dgp.sample(stream_seed(base, "system", m, repetition))
        test = config.dgp.generate(
            system, config.test_size, stream_seed(base, "test", m, repetition)
        )
        train_data = config.dgp.generate(
            system, m, stream_seed(base, "traindata", m, repetition))
        horizon = config.dgp.horizon
    else:
        system = config.dgp.sample(stream_seed(base, "system"))
        test = config.dgp.generate(system, config.test_size,
                                   stream_seed(base, "test"))
        train_data = config.dgp.generate(
            system, m, stream_seed(base, "traindata", m, repetition))
        horizon = config.dgp.horizon
    rep_seed = stream_seed(base, "rep", m, repetition)

    stdzr = Standardizer.fit(train_data.x, train_data.y)
    std_train = TimeSeriesDataset(
        x=stdzr.transform_x(train_data.x), y=stdzr.transform_y(train_data.y),
        latents=train_data.latents,
    )
    test_x1_std = stdzr.transform_x(test.x)[:, 0, :]

    records = []
    for model in config.models:
        started = time.perf_counter()
        try:
            fitted, params = _fit_tuned_model(model, config, rep_seed, std_train)
            pred = stdzr.inverse_y(fitted.predict(test_x1_std))
            score = r2(test.y, pred)
            failed = False
        except Exception as exc:
            log.warning("model %s failed at m=%d rep=%d: %s",
                        model, m, repetition, exc)
            score, params, failed = float("nan"), {}, True
        elapsed = time.perf_counter() - started
        log.info("m=%d rep=%d %s: r2=%s (%.2fs)",
                 m, repetition, model, f"{score:.4f}", elapsed)
        records.append(ResultRecord(
            model=model, m=m, horizon=horizon,
            repetition=repetition, r2=score, wall_time=elapsed,
            params=params, failed=failed,
        ))
    return records


def _run_repetition_task(args) -> list[ResultRecord]:
    config_dict, m, repetition = args
    return run_repetition(ExperimentConfig.from_dict(config_dict), m, repetition)


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> list[ResultRecord]:
    """All (m, repetition) cells of the grid; records come back sorted by
    (model, m, repetition) regardless of execution order."""
    tasks = [(m, rep) for m in config.sample_sizes
             for rep in range(config.repetitions)]
    records: list[ResultRecord] = []
    if jobs > 1:
        payload = [(config.to_dict(), m, rep) for m, rep in tasks]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for chunk in pool.map(_run_repetition_task, payload):
                records.extend(chunk)
    else:
        for m, rep in tasks:
            records.extend(run_repetition(config, m, rep))
    records.sort(key=lambda r: (r.model, r.m, r.repetition))
    return records


# ---------------------------------------------------------------------------
# Phase-transition sweep
# ---------------------------------------------------------------------------

def phase_transition_sweep(m: int, d_grid: list[int], systems: int, seed: int,
                           horizon: int = 3, q: int = 10,
                           test_size: int = 1000) -> list[dict]:
    """Fully observed linear systems, feature dimension swept against a fixed
    sample size; per dimension, the mean R^2 of the baseline-only and the
    privileged estimator over independently sampled systems."""
    rows = []
    for d_hat in d_grid:
        for sys_idx in range(systems):
            system = sample_system(
                d=d_hat, q=q, horizon=horizon,
                seed=stream_seed(seed, "pt-system", d_hat, sys_idx),
            )
            train_data = simulate(system, m,
                                  stream_seed(seed, "pt-train", d_hat, sys_idx))
            test = simulate(system, test_size,
                            stream_seed(seed, "pt-test", d_hat, sys_idx))
            fmap = IdentityMap(d_hat)
            x1 = test.x[:, 0, :]
            r2_ols = r2(test.y, fit_classical(train_data, fmap).predict(x1))
            r2_lupts = r2(test.y, fit_lupts(train_data, fmap).predict(x1))
            rows.append({
                "d_hat": d_hat, "system": sys_idx, "m": m,
                "r2_ols": r2_ols, "r2_lupts": r2_lupts,
                "gap": r2_lupts - r2_ols,
            })
    return rows


def summarize_phase_transition(rows: list[dict]) -> list[dict]:
    grid = sorted({row["d_hat"] for row in rows})
    out = []
    for d_hat in grid:
        sub = [row for row in rows if row["d_hat"] == d_hat]
        out.append({
            "d_hat": d_hat,
            "n_systems": len(sub),
            "mean_r2_ols": float(np.mean([r["r2_ols"] for r in sub])),
            "mean_r2_lupts": float(np.mean([r["r2_lupts"] for r in sub])),
            "mean_gap": float(np.mean([r["gap"] for r in sub])),
            "max_abs_gap": float(np.max(np.abs([r["gap"] for r in sub]))),
        })
    return out


# ---------------------------------------------------------------------------
# Bias-compounding study
# ---------------------------------------------------------------------------

def _truncated_system(full: LatentSystem, horizon: int) -> LatentSystem:
    """The same dynamics and outcome map observed over a shorter horizon."""
    return LatentSystem(
        d=full.d, q=full.q, horizon=horizon,
        transitions=[a.copy() for a in full.transitions[: horizon - 1]],
        outcome_map=full.outcome_map.copy(),
        transition_noise_std=full.transition_noise_std,
        outcome_noise_std=full.outcome_noise_std,
        init_std=full.init_std,
        target_spectral_radius=full.target_spectral_radius,
    )


def bias_compounding_study(t_grid: list[int], systems_per_t: int,
                           repetitions_per_system: int, m: int, seed: int,
                           d: int = 10, q: int = 3,
                           test_size: int = 1000) -> list[dict]:
    """Square-Sign observations fit with deliberately misspecified linear
    (identity) maps: per horizon and system, squared bias and variance of the
    baseline-only and privileged estimators over repeated training draws
    against a fixed per-system test set.

    Horizons are paired: system index s uses the same transitions and
    outcome map at every horizon (sampled once at max(t_grid) and truncated),
    so the trend over horizons is not confounded by system resampling."""
    max_horizon = max(t_grid)
    full_systems = [
        sample_system(d=d, q=q, horizon=max_horizon,
                      seed=stream_seed(seed, "bc-system", sys_idx))
        for sys_idx in range(systems_per_t)
    ]
    rows = []
    for horizon in t_grid:
        for sys_idx in range(systems_per_t):
            system = _truncated_system(full_systems[sys_idx], horizon)
            test = generate_square_sign_dataset(
                system, test_size, stream_seed(seed, "bc-test", horizon, sys_idx)
            )
            truth = true_conditional_mean(system, test.latents[:, 0, :])
            fmap = IdentityMap(2 * d)

            fits = {"ols": [], "lupts": []}
            for rep in range(repetitions_per_system):
                train_data = generate_square_sign_dataset(
                    system, m,
                    stream_seed(seed, "bc-train", horizon, sys_idx, rep),
                )
                fits["ols"].append(fit_classical(train_data, fmap))
                fits["lupts"].append(fit_lupts(train_data, fmap))

            x1 = test.x[:, 0, :]
            for model, fitted in fits.items():
                report = bias_variance(fitted, x1, truth)
                rows.append({
                    "horizon": horizon, "system": sys_idx, "model": model,
                    "m": m, "n_repetitions": repetitions_per_system,
                    "squared_bias": report.mean_squared_bias,
                    "variance": report.mean_variance,
                })
    return rows


def summarize_bias_compounding(rows: list[dict]) -> list[dict]:
    """Mean and Monte-Carlo standard error over systems, per (horizon, model)."""
    out = []
    keys = sorted({(r["horizon"], r["model"]) for r in rows},
                  key=lambda k: (k[0], k[1]))
    for horizon, model in keys:
        sub = [r for r in rows if r["horizon"] == horizon and r["model"] == model]
        biases = np.array([r["squared_bias"] for r in sub])
        variances = np.array([r["variance"] for r in sub])
        n = len(sub)
        out.append({
            "horizon": horizon, "model": model, "n_systems": n,
            "squared_bias": float(biases.mean()),
            "squared_bias_se": float(biases.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
            "variance": float(variances.mean()),
            "variance_se": float(variances.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
        })
    return out


# ---------------------------------------------------------------------------
# Representation-recovery study
# ---------------------------------------------------------------------------

SVCCA_EVAL_POINTS = 1000


def svcca_study(config: ExperimentConfig) -> list[dict]:
    """Train the representation learners of the roster and score how well
    their encoders recover the true latents (mean canonical correlation on a
    fresh evaluation set), next to test R^2."""
    encoder_models = [name for name in config.models
                      if name in REP_LEARNER_MODELS]
    if not encoder_models:
        raise ValueError("svcca study needs at least one representation learner")
    if config.dgp.kind == "linear":
        log.info("identity observations: latents equal inputs, recovery is trivial")

    base = config.base_seed
    system = config.dgp.sample(stream_seed(base, "system"))
    eval_data = config.dgp.generate(system, SVCCA_EVAL_POINTS,
                                    stream_seed(base, "svcca-eval"))
    rows = []
    for m in config.sample_sizes:
        for repetition in range(config.repetitions):
            train_data = config.dgp.generate(
                system, m, stream_seed(base, "traindata", m, repetition)
            )
            rep_seed = stream_seed(base, "rep", m, repetition)
            stdzr = Standardizer.fit(train_data.x, train_data.y)
            std_train = TimeSeriesDataset(
                x=stdzr.transform_x(train_data.x),
                y=stdzr.transform_y(train_data.y),
            )
            eval_x1_std = stdzr.transform_x(eval_data.x)[:, 0, :]
            for model in encoder_models:
                fitted, params = _fit_tuned_model(model, config, rep_seed,
                                                  std_train)
                pred = stdzr.inverse_y(fitted.predict(eval_x1_std))
                learned = fitted.encode(eval_x1_std)
                result = svcca(learned, eval_data.latents[:, 0, :])
                rows.append({
                    "model": model, "m": m, "repetition": repetition,
                    "svcca": result.mean_correlation,
                    "under_determined": result.under_determined,
                    "r2": r2(eval_data.y, pred),
                    "params": params,
                })
    return rows


# ---------------------------------------------------------------------------
# Timestamped-CSV sequence assembly
# ---------------------------------------------------------------------------

def _parse_timestamp(value: str) -> float:
    try:
        return float(value)
    except ValueError:
        pass
    try:
        parsed = datetime.fromisoformat(value)
    except ValueError as exc:
        raise ValueError(f"cannot parse timestamp {value!r}") from exc
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed.timestamp()


def assemble_sequences(rows: list[dict], timestamp_column: str,
                       outcome_column: str, length: int, step_hours: float,
                       min_gap_hours: float = 0.0) -> TimeSeriesDataset | None:
    """Greedy left-to-right assembly of complete, gap-respecting sequences
    from timestamped rows.

    Each sequence consumes `length` rows spaced `step_hours` apart: the first
    length - 1 rows supply the feature steps (every non-timestamp column,
    including the outcome column) and the final row supplies the outcome.
    Consecutive sequences are separated by at least `min_gap_hours` and never
    share rows. Returns None (with a warning) when no valid sequence exists.
    """
    if length < 2:
        raise ValueError("length must be >= 2 (features plus an outcome row)")
    if step_hours <= 0:
        raise ValueError("step_hours must be positive")
    if min_gap_hours < 0:
        raise ValueError("min_gap_hours must be >= 0")
    if not rows:
        warnings.warn("no input rows; nothing to assemble")
        return None

    feature_columns = [c for c in rows[0].keys() if c != timestamp_column]
    if outcome_column not in feature_columns:
        raise ValueError(f"outcome column {outcome_column!r} not in the table")

    def parse_row(row):
        values = np.empty(len(feature_columns))
        for j, col in enumerate(feature_columns):
            raw = row.get(col, "")
            try:
                values[j] = float(raw)
            except (TypeError, ValueError):
                values[j] = np.nan
        return values

    times = np.array([_parse_timestamp(str(r[timestamp_column])) for r in rows])
    order = np.argsort(times, kind="stable")
    times = times[order]
    matrix = np.stack([parse_row(rows[i]) for i in order])
    complete = ~np.isnan(matrix).any(axis=1)
    time_index = {t: i for i, t in reversed(list(enumerate(times)))}

    step_sec = step_hours * 3600.0
    gap_sec = min_gap_hours * 3600.0
    outcome_idx = feature_columns.index(outcome_column)

    sequences_x, sequences_y = [], []
    last_end = -np.inf
    for i, start_time in enumerate(times):
        if start_time <= last_end or start_time < last_end + gap_sec:
            continue
        member_idx = []
        for j in range(length):
            t = start_time + j * step_sec
            idx = time_index.get(t)
            if idx is None or not complete[idx]:
                member_idx = None
                break
            member_idx.append(idx)
        if member_idx is None:
            continue
        sequences_x.append(matrix[member_idx[:-1]])
        sequences_y.append([matrix[member_idx[-1], outcome_idx]])
        last_end = start_time + (length - 1) * step_sec

    if not sequences_x:
        warnings.warn("no valid sequence could be assembled")
        return None
    return TimeSeriesDataset(x=np.stack(sequences_x), y=np.array(sequences_y))
