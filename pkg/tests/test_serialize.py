import numpy as np
import pytest

from lupts.dgp import sample_system, simulate
from lupts.estimators import (
    GaussianKernel,
    fit_classical,
    fit_kernel_lupts,
    fit_lupts,
)
from lupts.features import (
    IdentityMap,
    SquareSignInverseMap,
    make_linear_transform,
    make_rff,
    make_rrf,
)
from lupts.harness import ResultRecord
from lupts.replearn import Batch, Objective, RepModel, TrainConfig, train
from lupts.serialize import (
    dataset_header,
    fmt,
    load_dataset,
    load_model,
    save_dataset,
    save_model,
    write_results_csv,
    write_summary_csv,
)


def small_dataset(m=12, seed=0):
    system = sample_system(d=2, q=2, horizon=3, seed=seed)
    return simulate(system, m, seed=seed + 1)


class TestDatasetCsv:
    def test_header_contract(self):
        assert dataset_header(2, 2, 1) == \
            ["t1_f1", "t1_f2", "t2_f1", "t2_f2", "y1"]

    def test_round_trip_is_exact(self, tmp_path):
        data = small_dataset()
        path = tmp_path / "data.csv"
        save_dataset(data, path)
        loaded = load_dataset(path)
        np.testing.assert_array_equal(loaded.x, data.x)
        np.testing.assert_array_equal(loaded.y, data.y)

    def test_latents_not_serialized(self, tmp_path):
        data = small_dataset()
        assert data.latents is not None
        path = tmp_path / "data.csv"
        save_dataset(data, path)
        assert load_dataset(path).latents is None

    def test_malformed_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError, match="contract"):
            load_dataset(path)


class TestModelRoundTrip:
    def assert_same_predictions(self, model, loaded, x):
        np.testing.assert_array_equal(loaded.predict(x), model.predict(x))

    def test_linear_predictor_identity_map(self, tmp_path):
        data = small_dataset()
        model = fit_classical(data, IdentityMap(2))
        path = tmp_path / "model.json"
        save_model(model, path)
        x = np.random.default_rng(0).normal(size=(5, 2))
        self.assert_same_predictions(model, load_model(path), x)

    def test_linear_predictor_rff(self, tmp_path):
        data = small_dataset()
        model = fit_lupts(data, make_rff(2, 7, gamma=0.05, seed=3))
        path = tmp_path / "model.json"
        save_model(model, path)
        x = np.random.default_rng(1).normal(size=(5, 2))
        self.assert_same_predictions(model, load_model(path), x)

    def test_linear_predictor_composed_map(self, tmp_path):
        rng = np.random.default_rng(2)
        system = sample_system(d=2, q=1, horizon=2, seed=4)
        from lupts.dgp import generate_square_sign_dataset

        data = generate_square_sign_dataset(system, 15, seed=5)
        fmap = make_linear_transform(SquareSignInverseMap(2),
                                     rng.normal(size=(4, 2)))
        model = fit_lupts(data, fmap)
        path = tmp_path / "model.json"
        save_model(model, path)
        x = generate_square_sign_dataset(system, 6, seed=6).x[:, 0, :]
        self.assert_same_predictions(model, load_model(path), x)

    def test_per_step_rrf_predictor(self, tmp_path):
        data = small_dataset()
        maps = tuple(make_rrf(2, 4, gamma=0.5, seed=s) for s in (1, 2, 3))
        model = fit_lupts(data, maps)
        path = tmp_path / "model.json"
        save_model(model, path)
        x = np.random.default_rng(3).normal(size=(5, 2))
        self.assert_same_predictions(model, load_model(path), x)

    def test_kernel_predictor(self, tmp_path):
        data = small_dataset()
        model = fit_kernel_lupts(data, GaussianKernel(gamma=0.4))
        path = tmp_path / "model.json"
        save_model(model, path)
        x = np.random.default_rng(4).normal(size=(5, 2))
        self.assert_same_predictions(model, load_model(path), x)

    def test_rep_model(self, tmp_path):
        rng = np.random.default_rng(5)
        model = RepModel(input_dim=3, horizon=2, rep_dim=4, n_outputs=1,
                         objective=Objective("crl", 0.5), seed=6)
        data = Batch(x=rng.normal(size=(20, 2, 3)), y=rng.normal(size=(20, 1)))
        train(model, data, TrainConfig(max_epochs=3, patience=3, seed=7))
        path = tmp_path / "model.json"
        save_model(model, path)
        x = rng.normal(size=(5, 3))
        self.assert_same_predictions(model, load_model(path), x)


class TestResultTables:
    def records(self):
        return [
            ResultRecord(model="ols", m=10, horizon=2, repetition=0,
                         r2=0.5, wall_time=0.1),
            ResultRecord(model="ols", m=10, horizon=2, repetition=1,
                         r2=0.7, wall_time=0.1),
            ResultRecord(model="lupts", m=10, horizon=2, repetition=0,
                         r2=float("nan"), wall_time=0.1, failed=True),
        ]

    def test_results_csv_marks_failures(self, tmp_path):
        path = tmp_path / "results.csv"
        write_results_csv(self.records(), path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "model,m,horizon,repetition,r2,failed,params"
        assert lines[3].startswith("lupts,10,2,0,nan,1")

    def test_summary_drops_failures(self, tmp_path):
        path = tmp_path / "summary.csv"
        write_summary_csv(self.records(), path)
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 2  # header + ols row only
        cols = lines[1].split(",")
        assert cols[0] == "ols"
        assert float(cols[3]) == pytest.approx(0.6)

    def test_float_formatting_round_trips(self):
        for value in (1 / 3, 1e-17, 123456.789, np.pi):
            assert float(fmt(value)) == value


class TestCvTable:
    def test_cv_table_layout(self, tmp_path):
        from lupts.features import IdentityMap
        from lupts.serialize import write_cv_table
        from lupts.tuning import HyperRange, random_search

        data = small_dataset(m=20, seed=9)

        def trainer(params, train_data):
            return fit_classical(train_data, IdentityMap(2))

        result = random_search(trainer, data,
                               [HyperRange("u", 0.0, 1.0)], n_draws=3,
                               k_folds=4, seed=1)
        path = tmp_path / "cv.csv"
        write_cv_table(result, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "draw,u,fold_1,fold_2,fold_3,fold_4,mean_score,failed"
        assert len(lines) == 4
