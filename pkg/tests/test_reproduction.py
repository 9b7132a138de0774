"""Desk-scale reproductions of the benchmark experiments (run with -m slow)"""
import numpy as np
import pytest

from core.experiment_manager import ExperimentManager
from estimators.solver_estimators import GaussNewtonEstimator, ProxLinearEstimator
from grid.admittance import build_admittance
from grid.cases import load_builtin_case
from measurement.plan import default_plan
from measurement.quadratic import build_measurement_matrices
from pipeline.dataset import NoiseConfig, generate_dataset
from pipeline.loads import synth_load_series
from pipeline.metrics import rmse_per_sample
from solvers.prox_linear import ProxLinearConfig
from utils.config import DEFAULT_CONFIG

pytestmark = pytest.mark.slow

BENCH_CONFIG = dict(DEFAULT_CONFIG, train_size=2000, test_size=500, epochs=200, runs=3, seed=0, net_init="solver")


def _case(name):
    grid = load_builtin_case(name)
    plan = default_plan(grid)
    return grid, plan, build_measurement_matrices(build_admittance(grid), plan)


@pytest.fixture(scope="module")
def case57_setup():
    return _case("case57")


@pytest.fixture(scope="module")
def case57_stream(case57_setup):
    grid, plan, _ = case57_setup
    series = synth_load_series(grid, 2500, seed=1)
    return generate_dataset(grid, series, plan, noise=NoiseConfig(), seed=1)


@pytest.fixture(scope="module")
def psse_results(case57_setup, case57_stream):
    _, _, forms = case57_setup
    manager = ExperimentManager(BENCH_CONFIG)
    return manager.run_psse_bench(forms, case57_stream, methods=["proxnet", "fnn", "gauss-newton"])


@pytest.mark.parametrize("name", ["case14", "case57"])
def test_solvers_recover_noiseless_states(name):
    grid, plan, forms = _case(name)
    series = synth_load_series(grid, 50, seed=4)
    dataset = generate_dataset(grid, series, plan, noise=NoiseConfig(sigma_flow=0.0, sigma_mag=0.0), seed=4)
    samples = [z for _, z, _ in dataset.samples()]
    solvers = [
        ProxLinearEstimator(forms, cfg=ProxLinearConfig(outer_iters=60, init_state="flat", tol=1e-12)),
        GaussNewtonEstimator(forms),
    ]
    for estimator in solvers:
        errors = rmse_per_sample(estimator.estimate_batch(samples), dataset.states)
        assert errors.max() <= 1e-6, estimator.method


def test_unrolled_net_beats_deeper_plain_networks(psse_results):
    proxnet = np.mean(psse_results["proxnet"].rmses)
    fnn6 = np.mean(psse_results["fnn-6"].rmses)
    fnn8 = np.mean(psse_results["fnn-8"].rmses)
    assert all(result.failures == 0 for result in psse_results.values())
    assert proxnet <= fnn6 <= fnn8
    for value, reference in ((proxnet, 3.49e-4), (fnn6, 6.35e-4), (fnn8, 9.02e-4)):
        assert value <= 10 * reference


def test_unrolled_net_inference_is_ten_times_faster_than_gauss_newton(psse_results):
    net = np.mean(psse_results["proxnet"].inference_times)
    gauss_newton = np.mean(psse_results["gauss-newton"].inference_times)
    assert gauss_newton >= 10 * net


def test_rnn_forecasts_at_least_as_well_as_var1(case57_setup, case57_stream):
    _, _, forms = case57_setup
    config = dict(BENCH_CONFIG, window=10, rnn_layers=3)
    manager = ExperimentManager(config)
    truth = manager.run_forecast_bench(case57_stream, methods=["rnn", "var1"])
    rnn = np.mean(truth["rnn"].rmses)
    assert rnn <= np.mean(truth["var1"].rmses)

    estimated = manager.estimated_series(GaussNewtonEstimator(forms), case57_stream)
    from_estimates = manager.run_forecast_bench(case57_stream, methods=["rnn"], series=estimated)
    assert np.mean(from_estimates["rnn"].rmses) <= 1.25 * rnn
