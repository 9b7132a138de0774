import json
import os

import numpy as np
import pytest

from artifacts.artifact_manager import ArtifactManager
from cli.report import RunReport, bus_error_frame, emit_report, rmse_trace_frame
from core.experiment_manager import ExperimentManager, MethodResult
from estimators.base_estimator import Component
from estimators.forecasters import RnnForecaster, Var1Forecaster, build_forecaster, load_forecaster
from estimators.monitor import StateMonitor
from estimators.network_estimators import FnnEstimator, ProxNetEstimator, load_estimator
from estimators.solver_estimators import GaussNewtonEstimator, ProxLinearEstimator
from neuralnet.training import TrainConfig
from pipeline.dataset import split_dataset
from solvers.prox_linear import ProxLinearConfig
from utils.errors import DimensionMismatch


class _Flaky(Component):
    method = "flaky"

    def __init__(self):
        super().__init__()
        self.calls = 0

    def run(self):
        self.calls += 1
        self.status = "running"
        raise RuntimeError("boom")


def test_solver_estimators_batch(case14_forms, case14_clean_dataset):
    samples = [z for _, z, _ in case14_clean_dataset.subset(np.arange(3)).samples()]
    gn = GaussNewtonEstimator(case14_forms)
    estimates = gn.estimate_batch(samples)
    assert estimates.shape == (3, case14_forms.n_state)
    np.testing.assert_allclose(estimates, case14_clean_dataset.states[:3], atol=1e-8)
    assert len(gn.inference_times) == 1

    lav = ProxLinearEstimator(case14_forms, cfg=ProxLinearConfig(init_state="flat"))
    np.testing.assert_allclose(lav.estimate_batch(samples[:1]), case14_clean_dataset.states[:1], atol=1e-6)
    assert lav.method == "prox-linear"


def test_estimate_batch_checks_width(case14_forms):
    with pytest.raises(DimensionMismatch):
        GaussNewtonEstimator(case14_forms).estimate_batch(np.zeros((2, case14_forms.n_measurements - 1)))


def test_weighted_gauss_newton_uses_sigmas(case14_forms, case14_dataset):
    _, z, _ = case14_dataset.sample(0)
    gn = GaussNewtonEstimator(case14_forms, weighted=True)
    np.testing.assert_allclose(gn._weights(z), 1.0 / z.noise_sigmas ** 2)
    assert gn.estimate(z).n_buses == 14


def test_fnn_estimator_method_tag(case14_forms):
    estimator = FnnEstimator(case14_forms, hidden_layers=6)
    assert estimator.method == "fnn-6"
    estimator.initialize()
    assert estimator.params.n_hidden == 6


def test_proxnet_fit_and_checkpoint(tmp_path, case14_forms, case14_dataset):
    train, test = split_dataset(case14_dataset, 30)
    cfg = TrainConfig(epochs=2, batch_size=10, learning_rate=1e-3, seed=1)
    estimator = ProxNetEstimator(case14_forms, blocks=1, layers=2, train_cfg=cfg)
    estimator.fit(train)
    assert len(estimator.history) == 2
    estimates = estimator.estimate_batch([z for _, z, _ in test.samples()])
    assert estimates.shape == (10, case14_forms.n_state)

    path = estimator.save(str(tmp_path / "proxnet.json"))
    loaded = load_estimator(case14_forms, path)
    assert isinstance(loaded, ProxNetEstimator)
    assert loaded.history == estimator.history
    np.testing.assert_array_equal(loaded.estimate_batch([z for _, z, _ in test.samples()]), estimates)


def test_proxnet_solver_init(case14_forms, case14_dataset):
    estimator = ProxNetEstimator(case14_forms, blocks=2, layers=2, init="solver", activation="soft_threshold",
                                 config={"init_state": "flat"})
    estimator.initialize()
    assert estimator.params.n_blocks == 2
    _, z, _ = case14_dataset.sample(0)
    assert np.all(np.isfinite(estimator.estimate(z).values))
    with pytest.raises(ValueError):
        ProxNetEstimator(case14_forms, init="zeros")


def test_network_estimator_rejects_foreign_params(case14_forms, two_bus_forms):
    other = ProxNetEstimator(two_bus_forms, blocks=1, layers=1)
    other.initialize()
    with pytest.raises(DimensionMismatch):
        ProxNetEstimator(case14_forms, params=other.params)
    with pytest.raises(TypeError):
        FnnEstimator(case14_forms, params=other.params)


def test_var1_forecaster_round_trip(tmp_path, case14_dataset):
    forecaster = Var1Forecaster().fit(case14_dataset.states[:30])
    v_next = forecaster.forecast(case14_dataset.states[:30])
    assert v_next.n_buses == 14
    path = forecaster.save(str(tmp_path / "var1.json"))
    loaded = load_forecaster(path)
    assert isinstance(loaded, Var1Forecaster)
    np.testing.assert_array_equal(loaded.forecast(case14_dataset.states[:30]).values, v_next.values)


def test_rnn_forecaster_round_trip(tmp_path, case14_dataset):
    config = {"window": 3, "rnn_layers": 1, "epochs": 2, "batch_size": 8}
    forecaster = build_forecaster("rnn", config=config)
    assert isinstance(forecaster, RnnForecaster)
    forecaster.fit(case14_dataset.states[:20])
    history = case14_dataset.states[:20]
    path = forecaster.save(str(tmp_path / "rnn.json"))
    loaded = load_forecaster(path)
    assert loaded.window == 3
    np.testing.assert_array_equal(loaded.forecast(history).values, forecaster.forecast(history).values)
    with pytest.raises(DimensionMismatch):
        forecaster.forecast(history[:2])


def test_unknown_forecaster():
    with pytest.raises(ValueError):
        build_forecaster("arima")


def test_monitor_without_missing_data_matches_zero_fill(case14_forms, case14_clean_dataset):
    forecaster = Var1Forecaster().fit(case14_clean_dataset.states)
    monitor = StateMonitor(GaussNewtonEstimator(case14_forms), forecaster, missing_rate=0.0)
    result = monitor.run(case14_clean_dataset)
    assert result.times.size == len(case14_clean_dataset) - 1
    np.testing.assert_array_equal(result.imputed, result.zero_filled)
    assert result.n_missing.sum() == 0
    assert not result.improved


def test_monitor_masks_readings(case14_forms, case14_dataset):
    estimator = FnnEstimator(case14_forms, hidden_layers=1, train_cfg=TrainConfig(seed=2))
    estimator.initialize()
    forecaster = Var1Forecaster().fit(case14_dataset.states)
    monitor = StateMonitor(estimator, forecaster, missing_rate=0.3, seed=4)
    first = monitor.run(case14_dataset)
    again = monitor.run(case14_dataset)
    assert first.n_missing.sum() > 0
    np.testing.assert_array_equal(first.n_missing, again.n_missing)
    summary = first.to_dict()
    assert summary["steps"] == len(case14_dataset) - 1
    assert set(summary["imputed_rmse"]) == {"mean", "std", "count"}
    with pytest.raises(ValueError):
        StateMonitor(estimator, forecaster, missing_rate=1.0)


def test_forecast_imputation_beats_zero_fill(case14_forms, case14_dataset):
    forecaster = Var1Forecaster().fit(case14_dataset.states)
    monitor = StateMonitor(GaussNewtonEstimator(case14_forms), forecaster, missing_rate=0.1)
    results = [monitor.run(case14_dataset, seed=seed) for seed in range(10)]
    assert sum(result.improved for result in results) >= 9
    imputed = np.mean([result.imputed_rmse.mean() for result in results])
    zero_filled = np.mean([result.zero_fill_rmse.mean() for result in results])
    assert imputed < zero_filled


def test_safe_execute_counts_failures():
    manager = ExperimentManager({})
    flaky = _Flaky()
    for _ in range(5):
        assert manager.safe_execute(flaky, "run") is None
    assert flaky.calls == 3
    assert manager.failure_counts["flaky"] == 3
    assert manager.error_history["flaky_run_error"]["count"] == 3
    assert manager.error_history["flaky_run_error"]["component"] == {"status": "running", "failures": 3}
    assert flaky.failure_count == 3
    assert manager.safe_execute(flaky, "missing") is None


def test_psse_bench_runs_solvers_once(case14_forms, case14_clean_dataset):
    manager = ExperimentManager({"runs": 2, "train_size": 8, "seed": 0})
    results = manager.run_psse_bench(case14_forms, case14_clean_dataset, methods=["gauss-newton"])
    result = results["gauss-newton"]
    assert result.metrics()["runs"] == 1
    assert result.failures == 0
    assert result.rmses[0] < 1e-8


def test_forecast_bench_scores_every_method(case14_dataset):
    config = {"window": 3, "train_size": 25, "epochs": 2, "batch_size": 8, "rnn_layers": 1}
    results = ExperimentManager(config).run_forecast_bench(case14_dataset, methods=["var1", "rnn", "fnn2"])
    for method in ("var1", "rnn", "fnn2"):
        assert results[method].failures == 0
        assert results[method].times.min() >= 28


def test_artifact_manager_flushes_action_log(tmp_path):
    artifacts = ArtifactManager(str(tmp_path / "out"), flush_every=3)
    for k in range(4):
        artifacts.log_action({"action": "step", "k": k})
    log_path = artifacts.path("logs", "actions.jsonl")
    assert len(open(log_path).read().splitlines()) == 3
    artifacts.flush()
    assert len(open(log_path).read().splitlines()) == 4
    assert artifacts.action_logs == []
    artifacts.save_json("reports/x.json", {"b": 1, "a": 2})
    assert artifacts.load_json("reports/x.json") == {"a": 2, "b": 1}
    assert "reports/x.json" in artifacts.written


def _report(n_buses=3, samples=4):
    rng = np.random.default_rng(0)
    truth = 1.0 + 0.01 * rng.standard_normal((samples, 2 * n_buses))
    result = MethodResult(name="demo")
    result.add_run(truth + 0.001, truth, np.arange(samples), inference_time=0.01)
    result.add_run(truth + 0.002, truth, np.arange(samples))
    return RunReport(task="eval-psse", methods={"demo": result}, config={"seed": 0}, seeds=[0])


def test_report_frames():
    report = _report()
    frame = bus_error_frame(report)
    assert list(frame["bus"]) == [1, 2, 3]
    assert rmse_trace_frame(report).shape[0] == 4
    metrics = report.to_dict()["methods"]["demo"]
    assert metrics["runs"] == 2
    assert metrics["rmse"]["mean"] == pytest.approx(np.mean(report.methods["demo"].rmses))
    assert bus_error_frame(RunReport(task="empty")).empty


def test_emit_report_separates_timings(tmp_path):
    artifacts = ArtifactManager(str(tmp_path / "out"))
    path = emit_report(_report(), artifacts, bus=2, instance=10)
    data = json.load(open(path))
    assert data["schema"] == "report/1"
    assert "timings" not in json.dumps(data["methods"])
    assert os.path.exists(artifacts.path("reports", "timings.json"))
    assert data["artifacts"]["bus_errors"] == os.path.join("reports", "bus_errors.csv")


def test_emit_report_renders_figures(tmp_path):
    artifacts = ArtifactManager(str(tmp_path / "out"))
    report = _report()
    emit_report(report, artifacts, plots=True)
    for name in ("rmse_traces", "bus_errors", "bus_trace"):
        assert os.path.exists(artifacts.path("reports", f"{name}.png"))
        assert report.artifacts[f"figure_{name}"] == os.path.join("reports", f"{name}.png")
