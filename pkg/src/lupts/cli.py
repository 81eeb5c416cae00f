"""Command-line entry point.

Config-file-first: every command reads a JSON config; flags only override the
seed, the output directory and the worker count, so runs are archivable.
Each run writes a manifest.json with the resolved config and library version.

Exit codes: 0 success, 1 config error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .dgp import TimeSeriesDataset
from .estimators import fit_classical, fit_consistent_rrf_lupts, fit_lupts
from .features import IdentityMap, RffMap, RrfMap
from .harness import (
    DgpConfig,
    ExperimentConfig,
    assemble_sequences,
    bias_compounding_study,
    phase_transition_sweep,
    run_experiment,
    summarize_bias_compounding,
    summarize_phase_transition,
    svcca_study,
)
from .metrics import r2
from .replearn import Batch, Objective, RepModel, TrainConfig, fit_distillation, train
from .serialize import (
    fmt,
    load_dataset,
    load_model,
    save_dataset,
    save_model,
    write_csv,
    write_manifest,
    write_results_csv,
    write_summary_csv,
    write_timings_csv,
    write_training_log,
)

CONFIG_SCHEMA_VERSION = 1

USAGE_EPILOG = f"""\
config schema version {CONFIG_SCHEMA_VERSION} (JSON). Shared keys:
  dgp: {{kind: square_sign|linear, d, q, horizon, spectral_radius,
        transition_noise_std, outcome_noise_std, init_std}}
per command:
  generate:         {{dgp, m, seed}}
  fit:              {{dataset, model: {{name, params}}, seed, rep_dim?, train?,
                     radius?}}
  evaluate:         {{model, dataset}}
  experiment:       {{dgp | dataset_path, models, sample_sizes, repetitions,
                     base_seed, test_size, test_fraction,
                     fresh_system_per_repetition, rep_dim, consistent_radius,
                     tuning: {{k_folds, n_draws_random_features,
                     n_draws_rep_learners}}, train: {{learning_rate,
                     batch_size, max_epochs, patience, validation_fraction}}}}
  phase-transition: {{m, d_grid, systems, horizon, q, test_size, base_seed}}
  bias-variance:    {{t_grid, systems_per_t, repetitions_per_system, m, d, q,
                     test_size, base_seed}}
  svcca:            experiment schema restricted to representation learners
  assemble:         {{input, timestamp_column, outcome_column, length,
                     step_hours, min_gap_hours}}
"""

log = logging.getLogger("lupts")


class ConfigError(Exception):
    pass


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc


def _require(config: dict, *keys: str) -> None:
    missing = [k for k in keys if k not in config]
    if missing:
        raise ConfigError(f"config is missing required keys: {missing}")


def _experiment_config(raw: dict, seed_override) -> ExperimentConfig:
    try:
        config = ExperimentConfig.from_dict(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad experiment config: {exc}") from exc
    if seed_override is not None:
        config.base_seed = seed_override
    return config


def _dgp_config(raw: dict) -> DgpConfig:
    try:
        return DgpConfig(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad dgp config: {exc}") from exc


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_generate(config: dict, out: Path, seed) -> None:
    _require(config, "dgp", "m")
    dgp = _dgp_config(config["dgp"])
    used_seed = seed if seed is not None else config.get("seed", 0)
    system = dgp.sample(used_seed)
    data = dgp.generate(system, int(config["m"]), used_seed)
    save_dataset(data, out / "dataset.csv")
    write_manifest(out, "generate", config, used_seed)
    log.info("wrote %s (%d series)", out / "dataset.csv", data.n_samples)


def _fit_single_model(spec: dict, data: TimeSeriesDataset, seed: int,
                      config: dict):
    name = spec.get("name")
    params = spec.get("params", {})
    k = data.n_features
    if name == "ols":
        return fit_classical(data, IdentityMap(k)), None
    if name == "lupts":
        return fit_lupts(data, IdentityMap(k)), None
    if name in ("ols_rff", "lupts_rff"):
        fmap = RffMap(k, int(params["n_features"]), params["gamma"], seed=seed)
        fit = fit_classical if name == "ols_rff" else fit_lupts
        return fit(data, fmap), None
    if name in ("ols_rrf", "lupts_rrf"):
        fmap = RrfMap(k, int(params["n_features"]), params["gamma"], seed=seed)
        fit = fit_classical if name == "ols_rrf" else fit_lupts
        return fit(data, fmap), None
    if name == "lupts_consistent_rrf":
        widths = [int(params["n_features"])] * data.horizon
        return fit_consistent_rrf_lupts(
            data, widths, params["gamma"],
            radius=config.get("radius", 100.0), seed=seed,
        ), None
    if name in ("classic_rep", "srl", "crl", "grl"):
        kind = {"classic_rep": "classic"}.get(name, name)
        objective = Objective(kind, params.get("lambda"))
        model = RepModel(
            input_dim=k, horizon=data.horizon,
            rep_dim=int(config.get("rep_dim", 25)),
            n_outputs=data.n_outputs, objective=objective, seed=seed,
        )
        train_config = TrainConfig(**{**config.get("train", {}), "seed": seed})
        result = train(model, Batch(x=data.x, y=data.y), train_config, objective)
        return model, result.log
    if name == "distillation":
        train_config = TrainConfig(**{**config.get("train", {}), "seed": seed})
        result = fit_distillation(
            Batch(x=data.x, y=data.y), train_config, train_config,
            lam=params["lambda"], rep_dim=int(config.get("rep_dim", 25)),
            seed=seed,
        )
        return result.student, result.student_log
    raise ConfigError(f"unknown model name {name!r}")


def cmd_fit(config: dict, out: Path, seed) -> None:
    _require(config, "dataset", "model")
    data = load_dataset(config["dataset"])
    used_seed = seed if seed is not None else config.get("seed", 0)
    try:
        model, training_log = _fit_single_model(config["model"], data,
                                                used_seed, config)
    except KeyError as exc:
        raise ConfigError(f"model spec is missing parameter {exc}") from exc
    save_model(model, out / "model.json")
    if training_log is not None:
        write_training_log(training_log, out / "training_log.csv")
    write_manifest(out, "fit", config, used_seed)
    log.info("wrote %s", out / "model.json")


def cmd_evaluate(config: dict, out: Path, seed) -> None:
    _require(config, "model", "dataset")
    model = load_model(config["model"])
    data = load_dataset(config["dataset"])
    pred = model.predict(data.x[:, 0, :])
    score = r2(data.y, pred)
    write_csv(out / "metrics.csv", ["metric", "value"], [["r2", score]])
    write_manifest(out, "evaluate", config, seed)
    log.info("r2 = %s", fmt(score))


def cmd_experiment(config: dict, out: Path, seed, jobs: int) -> None:
    exp = _experiment_config(config, seed)
    records = run_experiment(exp, jobs=jobs)
    write_results_csv(records, out / "results.csv")
    write_summary_csv(records, out / "summary.csv")
    write_timings_csv(records, out / "timings.csv")
    write_manifest(out, "experiment", exp.to_dict(), exp.base_seed)
    log.info("wrote %s and %s", out / "results.csv", out / "summary.csv")


def cmd_phase_transition(config: dict, out: Path, seed) -> None:
    _require(config, "d_grid")
    used_seed = seed if seed is not None else config.get("base_seed", 0)
    resolved = {
        "m": int(config.get("m", 100)),
        "d_grid": [int(d) for d in config["d_grid"]],
        "systems": int(config.get("systems", 50)),
        "horizon": int(config.get("horizon", 3)),
        "q": int(config.get("q", 10)),
        "test_size": int(config.get("test_size", 1000)),
        "base_seed": used_seed,
    }
    rows = phase_transition_sweep(
        m=resolved["m"], d_grid=resolved["d_grid"],
        systems=resolved["systems"], seed=used_seed,
        horizon=resolved["horizon"], q=resolved["q"],
        test_size=resolved["test_size"],
    )
    write_csv(out / "phase_transition_runs.csv",
              ["d_hat", "system", "m", "r2_ols", "r2_lupts", "gap"],
              [[r["d_hat"], r["system"], r["m"], r["r2_ols"], r["r2_lupts"],
                r["gap"]] for r in rows])
    summary = summarize_phase_transition(rows)
    write_csv(out / "phase_transition.csv",
              ["d_hat", "n_systems", "mean_r2_ols", "mean_r2_lupts",
               "mean_gap", "max_abs_gap"],
              [[s["d_hat"], s["n_systems"], s["mean_r2_ols"],
                s["mean_r2_lupts"], s["mean_gap"], s["max_abs_gap"]]
               for s in summary])
    write_manifest(out, "phase-transition", resolved, used_seed)
    log.info("wrote %s", out / "phase_transition.csv")


def cmd_bias_variance(config: dict, out: Path, seed) -> None:
    _require(config, "t_grid")
    used_seed = seed if seed is not None else config.get("base_seed", 0)
    resolved = {
        "t_grid": [int(t) for t in config["t_grid"]],
        "systems_per_t": int(config.get("systems_per_t", 4)),
        "repetitions_per_system": int(config.get("repetitions_per_system", 25)),
        "m": int(config.get("m", 1000)),
        "d": int(config.get("d", 10)),
        "q": int(config.get("q", 3)),
        "test_size": int(config.get("test_size", 1000)),
        "base_seed": used_seed,
    }
    rows = bias_compounding_study(
        t_grid=resolved["t_grid"], systems_per_t=resolved["systems_per_t"],
        repetitions_per_system=resolved["repetitions_per_system"],
        m=resolved["m"], seed=used_seed, d=resolved["d"], q=resolved["q"],
        test_size=resolved["test_size"],
    )
    write_csv(out / "bias_variance_runs.csv",
              ["horizon", "system", "model", "m", "n_repetitions",
               "squared_bias", "variance"],
              [[r["horizon"], r["system"], r["model"], r["m"],
                r["n_repetitions"], r["squared_bias"], r["variance"]]
               for r in rows])
    summary = summarize_bias_compounding(rows)
    write_csv(out / "bias_variance.csv",
              ["horizon", "model", "n_systems", "squared_bias",
               "squared_bias_se", "variance", "variance_se"],
              [[s["horizon"], s["model"], s["n_systems"], s["squared_bias"],
                s["squared_bias_se"], s["variance"], s["variance_se"]]
               for s in summary])
    write_manifest(out, "bias-variance", resolved, used_seed)
    log.info("wrote %s", out / "bias_variance.csv")


def cmd_svcca(config: dict, out: Path, seed) -> None:
    exp = _experiment_config(config, seed)
    rows = svcca_study(exp)
    write_csv(out / "svcca.csv",
              ["model", "m", "repetition", "svcca", "under_determined", "r2",
               "params"],
              [[r["model"], r["m"], r["repetition"], r["svcca"],
                int(r["under_determined"]), r["r2"],
                json.dumps(r["params"], sort_keys=True)] for r in rows])
    write_manifest(out, "svcca", exp.to_dict(), exp.base_seed)
    log.info("wrote %s", out / "svcca.csv")


def cmd_assemble(config: dict, out: Path, seed) -> None:
    _require(config, "input", "timestamp_column", "outcome_column", "length",
             "step_hours")
    try:
        with open(config["input"], newline="") as fh:
            rows = list(csv.DictReader(fh))
    except FileNotFoundError as exc:
        raise ConfigError(f"input table not found: {config['input']}") from exc
    data = assemble_sequences(
        rows,
        timestamp_column=config["timestamp_column"],
        outcome_column=config["outcome_column"],
        length=int(config["length"]),
        step_hours=float(config["step_hours"]),
        min_gap_hours=float(config.get("min_gap_hours", 0.0)),
    )
    if data is None:
        log.warning("no valid sequences; writing empty dataset")
        write_csv(out / "dataset.csv", ["empty"], [])
    else:
        save_dataset(data, out / "dataset.csv")
        log.info("assembled %d sequences of %d steps",
                 data.n_samples, data.horizon)
    write_manifest(out, "assemble", config, seed)


# ---------------------------------------------------------------------------
# Argument parsing and dispatch
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lupts",
        description="Privileged time-series learning experiments.",
        epilog=USAGE_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    commands = ["generate", "fit", "evaluate", "experiment",
                "phase-transition", "bias-variance", "svcca", "assemble"]
    for name in commands:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="JSON config path")
        cmd.add_argument("--out", required=True, help="output directory")
        cmd.add_argument("--seed", type=int, default=None,
                         help="override the config seed")
        cmd.add_argument("--jobs", type=int, default=1,
                         help="worker processes for repetitions")
    return parser


def dispatch(argv: list[str]) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO,
        format="%(asctime)s %(name)s %(message)s",
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; the contract maps those to 1
        return 0 if exc.code == 0 else 1

    out = Path(args.out)
    try:
        config = _load_config(args.config)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "generate":
            cmd_generate(config, out, args.seed)
        elif args.command == "fit":
            cmd_fit(config, out, args.seed)
        elif args.command == "evaluate":
            cmd_evaluate(config, out, args.seed)
        elif args.command == "experiment":
            cmd_experiment(config, out, args.seed, args.jobs)
        elif args.command == "phase-transition":
            cmd_phase_transition(config, out, args.seed)
        elif args.command == "bias-variance":
            cmd_bias_variance(config, out, args.seed)
        elif args.command == "svcca":
            cmd_svcca(config, out, args.seed)
        elif args.command == "assemble":
            cmd_assemble(config, out, args.seed)
        else:  # pragma: no cover - argparse rejects unknown commands
            return 1
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return 1
    except Exception as exc:
        log.error("run failed: %s", exc, exc_info=True)
        return 2
    return 0


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
