"""Acceptance suite: one test per release criterion, each printing a
pass/fail line (run with -s to see them as they complete).

The statistical criteria are seeded: every Monte-Carlo quantity below is a
deterministic function of the constants in this file.
"""

import numpy as np
import pytest

from helpers import (
    grouped_prediction_variances,
    max_relative_gradient_error,
    relative_gap,
    sign_test_pvalue,
)

from lupts.dgp import (
    TimeSeriesDataset,
    generate_square_sign_dataset,
    sample_system,
    simulate,
)
from lupts.estimators import (
    GaussianKernel,
    fit_classical,
    fit_consistent_rrf_lupts,
    fit_kernel_lupts,
    fit_lupts,
)
from lupts.features import (
    IdentityMap,
    SquareSignInverseMap,
    make_linear_transform,
    make_rff,
)
from lupts.harness import (
    DgpConfig,
    ExperimentConfig,
    bias_compounding_study,
    phase_transition_sweep,
    run_experiment,
    summarize_bias_compounding,
    summarize_phase_transition,
)
from lupts.linalg import lstsq, norm_constrained_lstsq, pinv
from lupts.metrics import svcca
from lupts.replearn import Batch, Objective, RepModel
from lupts.seeding import stream_seed


def report(criterion: int, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {criterion:02d}: {detail}")
    assert ok, f"criterion {criterion:02d}: {detail}"


# ---------------------------------------------------------------------------
# Shared studies
# ---------------------------------------------------------------------------

RISK_SEED = 301
PHASE_SEED = 401
BIAS_SEED = 601
REPLEARN_SEED = 901


@pytest.fixture(scope="module")
def risk_reduction_study():
    """d=5, T=3, m=50 latent system observed through Square-Sign; the fitted
    representation is a fixed linear transform of the true left inverse.
    200 training draws scored on a shared 1000-point test set."""
    d, horizon, m, q = 5, 3, 50, 1
    system = sample_system(d=d, q=q, horizon=horizon, seed=RISK_SEED)
    test = generate_square_sign_dataset(system, 1000, seed=RISK_SEED + 1)
    b = np.random.default_rng(RISK_SEED + 2).normal(size=(7, d))
    fmap = make_linear_transform(SquareSignInverseMap(d), b)
    x1 = test.x[:, 0, :]

    preds = {"classical": [], "privileged": []}
    risks = {"classical": [], "privileged": []}
    for rep in range(200):
        train = generate_square_sign_dataset(
            system, m, seed=stream_seed(RISK_SEED, "train", rep)
        )
        for name, fit in (("classical", fit_classical), ("privileged", fit_lupts)):
            pred = fit(train, fmap).predict(x1)
            preds[name].append(pred)
            risks[name].append(float(np.mean(np.sum((pred - test.y) ** 2, axis=1))))
    return {
        "risks": {k: np.array(v) for k, v in risks.items()},
        "preds": {k: np.stack(v) for k, v in preds.items()},
    }


PHASE_GRID = [10, 25, 50, 75, 100, 150, 200]


@pytest.fixture(scope="module")
def phase_rows():
    return phase_transition_sweep(m=100, d_grid=PHASE_GRID, systems=50,
                                  seed=PHASE_SEED, horizon=3, q=10,
                                  test_size=1000)


@pytest.fixture(scope="module")
def phase_variance_study():
    """Prediction-variance estimation for the phase-transition configuration:
    one fixed system per swept dimension, repeated training draws."""
    out = {}
    for d_hat in PHASE_GRID:
        system = sample_system(d=d_hat, q=10, horizon=3,
                               seed=stream_seed(PHASE_SEED, "var-sys", d_hat))
        test = simulate(system, 500,
                        seed=stream_seed(PHASE_SEED, "var-test", d_hat))
        fmap = IdentityMap(d_hat)
        x1 = test.x[:, 0, :]
        preds = {"classical": [], "privileged": []}
        for rep in range(60):
            train = simulate(system, 100,
                             seed=stream_seed(PHASE_SEED, "var-train", d_hat, rep))
            preds["classical"].append(fit_classical(train, fmap).predict(x1))
            preds["privileged"].append(fit_lupts(train, fmap).predict(x1))
        out[d_hat] = {k: np.stack(v) for k, v in preds.items()}
    return out


@pytest.fixture(scope="module")
def bias_study_rows():
    return bias_compounding_study(
        t_grid=[2, 3, 5], systems_per_t=5, repetitions_per_system=20,
        m=1000, seed=BIAS_SEED, d=10, q=3, test_size=1000,
    )


@pytest.fixture(scope="module")
def replearner_records():
    """The long acceptance job: Square-Sign (T=5, d=10, q=3), m=500, 10
    seeds, lambda tuned by 5-draw random search with 5-fold CV."""
    config = ExperimentConfig(
        dgp=DgpConfig(kind="square_sign", d=10, q=3, horizon=5),
        models=["classic_rep", "crl", "grl"],
        sample_sizes=[500], repetitions=10,
        base_seed=REPLEARN_SEED, test_size=1000,
    )
    return run_experiment(config, jobs=2)


# ---------------------------------------------------------------------------
# Criteria 1..12
# ---------------------------------------------------------------------------

def test_criterion_01_privileged_equals_classical_when_underdetermined():
    rng = np.random.default_rng(11)
    worst = 0.0

    # Linear features: fully observed system with d > m.
    system = sample_system(d=24, q=2, horizon=3, seed=12)
    data = simulate(system, 20, seed=13)
    x_test = simulate(system, 50, seed=14).x[:, 0, :]
    fmap = IdentityMap(24)
    for t in range(1, data.horizon + 1):
        z = fmap.apply(data.step(t))
        assert np.linalg.cond(z @ z.T) <= 1e10
    gap = relative_gap(fit_lupts(data, fmap).predict(x_test),
                       fit_classical(data, fmap).predict(x_test))
    worst = max(worst, gap)

    # Random Fourier features wider than the sample count.
    ss_system = sample_system(d=3, q=1, horizon=3, seed=15)
    ss_data = generate_square_sign_dataset(ss_system, 25, seed=16)
    ss_test = generate_square_sign_dataset(ss_system, 50, seed=17).x[:, 0, :]
    rff = make_rff(6, 40, gamma=0.05, seed=18)
    for t in range(1, ss_data.horizon + 1):
        z = rff.apply(ss_data.step(t))
        assert np.linalg.cond(z @ z.T) <= 1e10
    gap = relative_gap(fit_lupts(ss_data, rff).predict(ss_test),
                       fit_classical(ss_data, rff).predict(ss_test))
    worst = max(worst, gap)

    # Strictly positive-definite Gaussian kernel on distinct points.
    kernel = GaussianKernel(gamma=0.3)
    k_system = sample_system(d=3, q=2, horizon=4, seed=19)
    k_data = simulate(k_system, 20, seed=20)
    k_test = rng.normal(size=(40, 3))
    for t in range(1, k_data.horizon + 1):
        assert np.linalg.cond(kernel(k_data.step(t), k_data.step(t))) <= 1e10
    baseline_only = TimeSeriesDataset(x=k_data.x[:, :1, :], y=k_data.y)
    gap = relative_gap(fit_kernel_lupts(k_data, kernel).predict(k_test),
                       fit_kernel_lupts(baseline_only, kernel).predict(k_test))
    worst = max(worst, gap)

    report(1, worst <= 1e-7,
           f"linear/RFF/Gaussian-kernel prediction gap <= 1e-7 (worst {worst:.2e})")


def test_criterion_02_linear_transform_invariance():
    d = 4
    system = sample_system(d=d, q=2, horizon=3, seed=21)
    data = generate_square_sign_dataset(system, 60, seed=22)
    x_test = generate_square_sign_dataset(system, 40, seed=23).x[:, 0, :]
    base = SquareSignInverseMap(d)
    base_predictions = {
        fit.__name__: fit(data, base).predict(x_test)
        for fit in (fit_classical, fit_lupts)
    }
    rng = np.random.default_rng(24)
    worst = 0.0
    for _ in range(20):
        rows = int(rng.integers(d, 2 * d + 3))
        b = rng.normal(size=(rows, d))
        transformed = make_linear_transform(base, b)
        for fit in (fit_classical, fit_lupts):
            gap = relative_gap(fit(data, transformed).predict(x_test),
                               base_predictions[fit.__name__])
            worst = max(worst, gap)
    report(2, worst <= 1e-6,
           f"20 full-column-rank transforms leave predictions unchanged "
           f"(worst gap {worst:.2e})")


def test_criterion_03_privileged_risk_never_worse(risk_reduction_study):
    risks_c = risk_reduction_study["risks"]["classical"]
    risks_p = risk_reduction_study["risks"]["privileged"]
    wins = int(np.sum(risks_p < risks_c))
    n_untied = int(np.sum(risks_p != risks_c))
    pval = sign_test_pvalue(wins, n_untied)
    ok = risks_p.mean() <= risks_c.mean() and pval <= 0.01
    report(3, ok,
           f"mean risk {risks_p.mean():.4f} <= {risks_c.mean():.4f}, "
           f"sign test p={pval:.2e} <= 0.01 ({wins}/{n_untied} wins)")


def test_criterion_04_two_regimes(phase_rows):
    summary = {s["d_hat"]: s for s in summarize_phase_transition(phase_rows)}
    details = []
    ok = True
    for d_hat in (10, 25, 50):
        gaps = [r["gap"] for r in phase_rows if r["d_hat"] == d_hat]
        wins = int(np.sum(np.array(gaps) > 0))
        pval = sign_test_pvalue(wins, len(gaps))
        ok = ok and summary[d_hat]["mean_gap"] >= 0 and pval <= 0.05
        details.append(f"d={d_hat}: gap {summary[d_hat]['mean_gap']:.4f}, p={pval:.1e}")
    for d_hat in (100, 150, 200):
        mean_gap = abs(summary[d_hat]["mean_gap"])
        ok = ok and mean_gap <= 1e-6
        details.append(f"d={d_hat}: |gap| {mean_gap:.1e}")
    report(4, ok, "; ".join(details))


def test_criterion_05_variance_reduction_universality(
        risk_reduction_study, phase_variance_study, bias_study_rows):
    details = []
    ok = True

    def grouped_check(preds_c, preds_p, label):
        nonlocal ok
        var_c = grouped_prediction_variances(preds_c)
        var_p = grouped_prediction_variances(preds_p)
        diffs = var_p - var_c
        margin = float(np.mean(diffs))
        se = float(np.std(diffs, ddof=1) / np.sqrt(len(diffs)))
        ok = ok and margin <= 2.0 * se
        details.append(f"{label}: dvar {margin:.2e} (se {se:.1e})")

    grouped_check(risk_reduction_study["preds"]["classical"],
                  risk_reduction_study["preds"]["privileged"], "transform-of-truth")
    for d_hat, preds in phase_variance_study.items():
        grouped_check(preds["classical"], preds["privileged"], f"linear d={d_hat}")

    per_system = {}
    for row in bias_study_rows:
        key = (row["horizon"], row["system"])
        per_system.setdefault(key, {})[row["model"]] = row["variance"]
    for horizon in (2, 3, 5):
        diffs = np.array([
            per_system[(horizon, s)]["lupts"] - per_system[(horizon, s)]["ols"]
            for s in range(5)
        ])
        margin = float(diffs.mean())
        se = float(diffs.std(ddof=1) / np.sqrt(len(diffs)))
        ok = ok and margin <= 2.0 * se
        details.append(f"square-sign T={horizon}: dvar {margin:.2e} (se {se:.1e})")

    report(5, ok, "; ".join(details))


def test_criterion_06_bias_compounding(bias_study_rows):
    summary = {(s["horizon"], s["model"]): s
               for s in summarize_bias_compounding(bias_study_rows)}
    details = []
    ok = True
    for horizon in (2, 3, 5):
        lupts = summary[(horizon, "lupts")]
        ols = summary[(horizon, "ols")]
        ok = ok and lupts["squared_bias"] >= ols["squared_bias"]
        details.append(f"T={horizon}: bias {lupts['squared_bias']:.3f} >= "
                       f"{ols['squared_bias']:.3f}")
    for lo, hi in ((2, 3), (3, 5)):
        b_lo, b_hi = summary[(lo, "lupts")], summary[(hi, "lupts")]
        slack = 2.0 * np.hypot(b_lo["squared_bias_se"], b_hi["squared_bias_se"])
        ok = ok and b_hi["squared_bias"] >= b_lo["squared_bias"] - slack
        details.append(f"T{lo}->T{hi}: {b_lo['squared_bias']:.3f} -> "
                       f"{b_hi['squared_bias']:.3f} (slack {slack:.3f})")
    report(6, ok, "; ".join(details))


def test_criterion_07_rff_kernel_fidelity():
    gamma = 0.5
    rng = np.random.default_rng(71)
    pairs = [(rng.normal(size=3), rng.normal(size=3)) for _ in range(20)]

    def errors(width):
        fmap = make_rff(3, width, gamma, seed=72)
        return np.array([
            abs(float(fmap.apply(x) @ fmap.apply(xp))
                - np.exp(-gamma * np.sum((x - xp) ** 2)))
            for x, xp in pairs
        ])

    wide = errors(10_000)
    narrow = errors(100)
    ok = wide.max() <= 0.05 and narrow.mean() > wide.mean()
    report(7, ok,
           f"max error {wide.max():.4f} <= 0.05 at 1e4 features; "
           f"mean error shrinks {narrow.mean():.4f} -> {wide.mean():.4f}")


def test_criterion_08_gradient_correctness():
    rng = np.random.default_rng(81)
    worst = 0.0
    for kind, lam in (("srl", None), ("crl", 0.4), ("grl", 0.6),
                      ("classic", None), ("distill", 0.3)):
        model = RepModel(input_dim=4, horizon=3, rep_dim=3, n_outputs=2,
                         objective=Objective(kind, lam), seed=82)
        batch = Batch(
            x=rng.normal(size=(6, 3, 4)), y=rng.normal(size=(6, 2)),
            teacher=rng.normal(size=(6, 2)) if kind == "distill" else None,
        )
        err = max_relative_gradient_error(model, batch, Objective(kind, lam),
                                          n_probes=50, seed=83)
        worst = max(worst, err)
    report(8, worst <= 1e-4,
           f"five objectives, 50 probes each, worst relative error {worst:.2e}")


def test_criterion_10_svcca_recovery():
    rng = np.random.default_rng(101)
    z = rng.normal(size=(10_000, 2))
    transform = rng.normal(size=(2, 2)) + 2.0 * np.eye(2)
    aligned = svcca(z @ transform, z).mean_correlation
    noise = svcca(rng.normal(size=(10_000, 2)), z).mean_correlation
    ok = aligned >= 0.999 and noise <= 0.1
    report(10, ok,
           f"exact linear transform scores {aligned:.6f} >= 0.999; "
           f"independent noise scores {noise:.4f} <= 0.1")


def test_criterion_11_norm_constrained_estimator():
    system = sample_system(d=3, q=2, horizon=3, seed=111)
    data = simulate(system, 40, seed=112)
    radius = 0.05
    constrained = fit_consistent_rrf_lupts(
        data, widths_per_step=[8, 8, 8], gamma=1.0, radius=radius, seed=113
    )
    norms = [np.linalg.norm(constrained.diagnostics.beta, axis=0).max()]
    norms += [np.linalg.norm(a, axis=0).max()
              for a in constrained.diagnostics.transitions]
    bound_ok = max(norms) <= radius + 1e-6

    relaxed = fit_consistent_rrf_lupts(
        data, widths_per_step=[8, 8, 8], gamma=1.0, radius=1e12, seed=113
    )
    unconstrained = fit_lupts(data, relaxed.feature_maps)
    x_test = simulate(system, 30, seed=114).x[:, 0, :]
    gap = relative_gap(relaxed.predict(x_test), unconstrained.predict(x_test))
    ok = bound_ok and gap <= 1e-6
    report(11, ok,
           f"max fitted norm {max(norms):.6f} <= {radius} + 1e-6; "
           f"inactive-constraint gap {gap:.2e} <= 1e-6")


def test_criterion_12_linalg_oracle_equivalences():
    rng = np.random.default_rng(121)
    worst_penrose = 0.0
    for _ in range(40):
        m, n = int(rng.integers(2, 9)), int(rng.integers(1, 7))
        a = rng.normal(size=(m, n))
        if rng.random() < 0.3 and n > 1:
            a[:, -1] = a[:, 0]
        p = pinv(a)
        sigma_max = np.linalg.svd(a, compute_uv=False)[0]
        residuals = [
            np.abs(a @ p @ a - a).max(),
            np.abs(p @ a @ p - p).max(),
            np.abs((a @ p).T - a @ p).max(),
            np.abs((p @ a).T - p @ a).max(),
        ]
        worst_penrose = max(worst_penrose, max(residuals) / sigma_max)

    worst_lstsq = 0.0
    for _ in range(100):
        m, n = int(rng.integers(4, 20)), int(rng.integers(1, 4))
        m = max(m, n + 1)
        a = rng.normal(size=(m, n))
        b = rng.normal(size=(m, 2))
        expected = np.linalg.solve(a.T @ a, a.T @ b)
        worst_lstsq = max(worst_lstsq,
                          float(np.abs(lstsq(a, b) - expected).max()))

    radius_ok = True
    for _ in range(20):
        a = rng.normal(size=(10, 4))
        b = rng.normal(size=10)
        radius = float(rng.uniform(0.01, 1.0))
        theta = norm_constrained_lstsq(a, b, radius)
        radius_ok = radius_ok and np.linalg.norm(theta) <= radius * (1 + 1e-6)

    ok = worst_penrose <= 1e-8 and worst_lstsq <= 1e-8 and radius_ok
    report(12, ok,
           f"Penrose residuals {worst_penrose:.2e} <= 1e-8; "
           f"normal-equations gap {worst_lstsq:.2e} <= 1e-8 on 100 instances; "
           f"norm constraints respected")


@pytest.mark.slow
def test_criterion_09_representation_learner_direction(replearner_records):
    scores = {}
    for rec in replearner_records:
        scores.setdefault(rec.model, {})[rec.repetition] = rec.r2
    details = []
    ok = True
    for model in ("crl", "grl"):
        paired = [(scores[model][rep], scores["classic_rep"][rep])
                  for rep in sorted(scores[model])]
        wins = sum(a > b for a, b in paired)
        n_untied = sum(a != b for a, b in paired)
        pval = sign_test_pvalue(wins, n_untied)
        mean_model = float(np.mean([a for a, _ in paired]))
        mean_classic = float(np.mean([b for _, b in paired]))
        ok = ok and mean_model >= mean_classic and pval <= 0.05
        details.append(f"{model}: mean r2 {mean_model:.4f} vs classic "
                       f"{mean_classic:.4f}, {wins}/{n_untied} wins, p={pval:.3f}")
    report(9, ok, "; ".join(details))
