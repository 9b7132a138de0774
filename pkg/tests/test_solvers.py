import dataclasses

import numpy as np
import pytest

from estimators.solver_estimators import GaussNewtonEstimator
from measurement.quadratic import evaluate_measurements, jacobian_at
from solvers.gauss_newton import gauss_newton_wls
from solvers.ista import ista_coefficients, ista_iterate, ista_solve, lasso_objective
from solvers.lav import lav_objective, soft_threshold
from solvers.linalg import lambda_max, pseudo_inverse
from solvers.prox_linear import (
    ProxLinearConfig,
    SolveTrace,
    linearization_path,
    pin_reference,
    prox_linear_lav,
    reduced_inverse,
)
from utils.errors import DimensionMismatch, Diverged, RankDeficient


def _noisy_sample(dataset, j=0):
    _, z, v = dataset.sample(j)
    return z.values, v.values


def test_soft_threshold():
    np.testing.assert_array_equal(soft_threshold(np.array([-3.0, -0.5, 0.0, 0.5, 3.0]), 1.0),
                                  [-2.0, 0.0, 0.0, 0.0, 2.0])
    assert soft_threshold(2.5, 0.5) == 2.0
    with pytest.raises(ValueError):
        soft_threshold(1.0, -0.1)


def test_lav_objective_zero_at_truth(two_bus_forms, two_bus_state):
    z = evaluate_measurements(two_bus_forms, two_bus_state)
    assert lav_objective(two_bus_forms, z, two_bus_state) == pytest.approx(0.0, abs=1e-15)


def test_lav_objective_matches_literal_sum(case14_forms):
    rng = np.random.default_rng(3)
    v = 1.0 + 0.1 * rng.standard_normal(case14_forms.n_state)
    z = rng.standard_normal(case14_forms.n_measurements)
    literal = sum(abs(z[m] - v @ (form.h @ v)) for m, form in enumerate(case14_forms)) / len(case14_forms)
    assert lav_objective(case14_forms, z, v) == pytest.approx(literal, rel=1e-12)
    with pytest.raises(DimensionMismatch):
        lav_objective(case14_forms, z[:-1], v)


def test_pseudo_inverse_small_example():
    b = pseudo_inverse(np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]))
    np.testing.assert_allclose(b, [[2 / 3, -1 / 3, 1 / 3], [-1 / 3, 2 / 3, 1 / 3]], atol=1e-12)


def test_pseudo_inverse_is_left_inverse():
    rng = np.random.default_rng(4)
    for _ in range(5):
        jac = rng.standard_normal((12, 5))
        b = pseudo_inverse(jac)
        assert np.max(np.abs(b @ jac - np.eye(5))) <= 1e-10


def test_pseudo_inverse_rejects_rank_deficiency():
    with pytest.raises(RankDeficient):
        pseudo_inverse(np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]))
    with pytest.raises(RankDeficient):
        pseudo_inverse(np.ones((2, 3)))


def test_lambda_max_matches_eigvalsh():
    rng = np.random.default_rng(5)
    b = rng.standard_normal((4, 9))
    assert lambda_max(b, iterations=200) == pytest.approx(np.linalg.eigvalsh(b @ b.T).max(), rel=1e-8)


def test_ista_scalar_prox():
    u = ista_solve(np.array([[1.0]]), np.array([0.0]), np.array([3.0]), mu_i=0.5, eta=0.5, n_iter=200)
    assert abs(u[0] - 2.0) <= 1e-6


def test_ista_is_monotone_and_reaches_minimum():
    b_mat = np.array([[2.0, 0.3], [0.1, 1.5]])
    z = np.array([0.2, -0.4])
    v_i = np.array([1.5, -2.0])
    mu = 1.0
    eta = 2.0 * mu / (2 * np.linalg.eigvalsh(b_mat.T @ b_mat).max())
    coef = ista_coefficients(b_mat, v_i, mu, eta)
    u = np.zeros(2)
    values = [lasso_objective(b_mat, z, v_i, mu, u)]
    for _ in range(400):
        u, _ = ista_iterate(coef, z, 1, u)
        values.append(lasso_objective(b_mat, z, v_i, mu, u))
    assert np.all(np.diff(values) <= 1e-12)

    grid = np.linspace(-4.0, 4.0, 401)
    uu, vv = np.meshgrid(grid, grid)
    brute = min(lasso_objective(b_mat, z, v_i, mu, np.array([a, c])) for a, c in zip(uu.ravel(), vv.ravel()))
    assert values[-1] <= brute + 1e-6


def test_ista_validates_steps():
    with pytest.raises(ValueError):
        ista_solve(np.eye(2), np.zeros(2), np.zeros(2), mu_i=0.0, eta=0.1, n_iter=3)
    with pytest.raises(ValueError):
        ista_solve(np.eye(2), np.zeros(2), np.zeros(2), mu_i=1.0, eta=0.1, n_iter=0)


def test_pin_reference_rotates_to_real_axis():
    v = np.array([0.0, 1.0, 1.0, 0.0])
    pinned = pin_reference(v, 1)
    np.testing.assert_allclose(pinned, [1.0, 0.0, 0.0, -1.0], atol=1e-15)


def test_reduced_inverse_has_zero_reference_row(case14_forms):
    v = pin_reference(np.tile([1.0, 0.0], case14_forms.n_state // 2), case14_forms.reference_coord)
    b_mat = reduced_inverse(case14_forms, v)
    assert b_mat.shape == (case14_forms.n_state, case14_forms.n_measurements)
    np.testing.assert_array_equal(b_mat[case14_forms.reference_coord], 0.0)
    free = case14_forms.free_coords()
    jac = jacobian_at(case14_forms, v)[:, free]
    assert np.max(np.abs(b_mat[free] @ jac - np.eye(free.size))) <= 1e-10


def test_fixed_point_is_kept(two_bus_forms, two_bus_state):
    z = evaluate_measurements(two_bus_forms, two_bus_state)
    cfg = ProxLinearConfig(outer_iters=2, inner_iters=20, init_state=two_bus_state)
    v_hat, trace = prox_linear_lav(two_bus_forms, z, cfg)
    np.testing.assert_allclose(v_hat.values, two_bus_state, atol=1e-12)
    assert trace.objectives[-1] == pytest.approx(0.0, abs=1e-12)


def test_prox_linear_recovers_noiseless_two_bus(two_bus_forms, two_bus_state):
    z = evaluate_measurements(two_bus_forms, two_bus_state)
    v_hat, trace = prox_linear_lav(two_bus_forms, z, ProxLinearConfig(init_state="flat"))
    assert np.max(np.abs(v_hat.values - two_bus_state)) <= 1e-8
    assert trace.converged


def test_prox_linear_recovers_noiseless_case14(case14_forms, case14_clean_dataset):
    z, v_true = _noisy_sample(case14_clean_dataset, 3)
    v_hat, _ = prox_linear_lav(case14_forms, z, ProxLinearConfig(init_state="flat"))
    assert np.max(np.abs(v_hat.values - v_true)) <= 1e-6


def test_prox_linear_objective_never_increases(case14_forms, case14_dataset):
    z, _ = _noisy_sample(case14_dataset, 0)
    cfg = ProxLinearConfig(outer_iters=10, inner_iters=50, init_state="flat")
    _, trace = prox_linear_lav(case14_forms, z, cfg)
    obj = np.asarray(trace.objectives)
    assert np.all(np.diff(obj) <= 1e-12 * np.maximum(1.0, obj[:-1]))
    assert obj[-1] < obj[0]


def test_prox_linear_early_stop_and_trace_json(two_bus_forms, two_bus_state):
    z = evaluate_measurements(two_bus_forms, two_bus_state)
    _, trace = prox_linear_lav(two_bus_forms, z, ProxLinearConfig(init_state="flat", tol=1e-12))
    assert trace.stop_reason in ("tol", "stalled")
    assert trace.iterations < 30
    data = trace.to_dict(include_timings=False)
    assert "timings" not in data
    assert data["iterations"] == trace.iterations


def test_prox_linear_rejects_wrong_length(two_bus_forms):
    with pytest.raises(DimensionMismatch):
        prox_linear_lav(two_bus_forms, np.zeros(3))


def test_config_validation():
    with pytest.raises(ValueError):
        ProxLinearConfig(inner_iters=0)
    with pytest.raises(ValueError):
        ProxLinearConfig(readout="median")
    cfg = ProxLinearConfig(mu=[4.0, 2.0])
    assert cfg.mu_at(0, 10) == 4.0
    assert cfg.mu_at(5, 10) == 2.0
    assert ProxLinearConfig().mu_at(0, 10) == 5.0


def test_linearization_path_is_constant_at_its_own_measurements(two_bus_forms, two_bus_state):
    cfg = ProxLinearConfig(outer_iters=3, inner_iters=10, init_state=two_bus_state)
    path = linearization_path(two_bus_forms, cfg=cfg)
    assert len(path) == 4
    for point in path:
        np.testing.assert_allclose(point, two_bus_state, atol=1e-12)


def test_frozen_path_needs_enough_points(two_bus_forms, two_bus_state):
    cfg = ProxLinearConfig(outer_iters=2, path=[two_bus_state])
    with pytest.raises(DimensionMismatch):
        prox_linear_lav(two_bus_forms, np.zeros(4), cfg)


def test_gauss_newton_recovers_noiseless_two_bus(two_bus_forms, two_bus_state):
    z = evaluate_measurements(two_bus_forms, two_bus_state)
    v_hat, trace = gauss_newton_wls(two_bus_forms, z)
    assert trace.converged
    np.testing.assert_allclose(v_hat.values, two_bus_state, atol=1e-8)


def test_gauss_newton_weights_validated(two_bus_forms):
    with pytest.raises(ValueError):
        gauss_newton_wls(two_bus_forms, np.zeros(4), weights=np.zeros(4))


def test_gauss_newton_reports_exhausted_iterations(case14_forms, case14_dataset):
    z, _ = _noisy_sample(case14_dataset, 0)
    _, trace = gauss_newton_wls(case14_forms, z, max_iter=1)
    assert trace.stop_reason == "max_iter"
    assert not trace.converged
    with pytest.raises(Diverged) as info:
        gauss_newton_wls(case14_forms, z, max_iter=1, strict=True)
    assert info.value.details["iterations"] == 1
    assert info.value.details["step"] > 1e-10


def test_strict_estimator_raises_on_exhausted_iterations(case14_forms, case14_dataset):
    _, z, _ = case14_dataset.sample(0)
    lenient = GaussNewtonEstimator(case14_forms, max_iter=1)
    lenient.estimate(z)
    assert lenient.last_trace.stop_reason == "max_iter"
    strict = GaussNewtonEstimator(case14_forms, max_iter=1, config={"gn_strict": True})
    with pytest.raises(Diverged):
        strict.estimate(z)


def test_prox_linear_keeps_the_least_squares_point_under_an_outlier(case14_forms, case14_dataset):
    z, _ = _noisy_sample(case14_dataset, 1)
    z = z.copy()
    z[0] += 1.0
    v_ls, trace = gauss_newton_wls(case14_forms, z)
    assert trace.converged

    # B(v) z = v holds at a least-squares stationary point, so u = 0 solves every inner Lasso
    b_mat = reduced_inverse(case14_forms, v_ls.values)
    np.testing.assert_allclose(b_mat @ z, v_ls.values, atol=1e-8)

    cfg = ProxLinearConfig(outer_iters=2, inner_iters=20, init_state=v_ls.values)
    v_hat, _ = prox_linear_lav(case14_forms, z, cfg)
    np.testing.assert_allclose(v_hat.values, v_ls.values, atol=1e-8)


def test_prox_linear_and_gauss_newton_agree_on_clean_data(case14_forms, case14_clean_dataset):
    z, _ = _noisy_sample(case14_clean_dataset, 0)
    v_lav, _ = prox_linear_lav(case14_forms, z, ProxLinearConfig(init_state="flat"))
    v_wls, _ = gauss_newton_wls(case14_forms, z)
    np.testing.assert_allclose(v_lav.values, v_wls.values, atol=1e-6)


def test_solve_trace_records_iterations():
    trace = SolveTrace(method="demo")
    trace.record(np.zeros(2), 1.0)
    trace.record(np.ones(2), 0.5, inner_residual=0.1, step_size=2.0, backtracks=1, elapsed=0.01)
    assert trace.iterations == 1
    assert trace.backtracks == [1]
    assert dataclasses.asdict(trace)["objectives"] == [1.0, 0.5]


@pytest.mark.slow
def test_ieee57_noisy_sample_lav_and_wls_agree():
    from grid.admittance import build_admittance
    from grid.cases import load_builtin_case
    from measurement.plan import default_plan
    from measurement.quadratic import build_measurement_matrices
    from pipeline.dataset import NoiseConfig, generate_dataset
    from pipeline.loads import synth_load_series

    grid = load_builtin_case("case57")
    plan = default_plan(grid)
    forms = build_measurement_matrices(build_admittance(grid), plan)
    dataset = generate_dataset(grid, synth_load_series(grid, 2, seed=0), plan, noise=NoiseConfig(), seed=0)
    z, _ = _noisy_sample(dataset, 0)
    cfg = ProxLinearConfig(init_state="flat")
    v_lav, _ = prox_linear_lav(forms, z, cfg)
    flat = pin_reference(np.tile([1.0, 0.0], forms.n_state // 2), forms.reference_coord)
    assert lav_objective(forms, z, v_lav) <= lav_objective(forms, z, flat)
    v_wls, _ = gauss_newton_wls(forms, z)
    assert np.max(np.abs(v_lav.values - v_wls.values)) <= 1e-3
