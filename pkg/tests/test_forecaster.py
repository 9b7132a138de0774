import numpy as np
import pytest

from forecaster.imputation import impute_with_forecast
from forecaster.rnn import init_rnn, rnn_forward, rnn_grad
from forecaster.training import RnnArch, forecast_stream, train_fnn_forecaster, train_rnn
from forecaster.var1 import VarParams, var1_fit, var1_predict
from forecaster.windows import make_window_dataset, window_counts
from measurement.noise import MeasurementVector
from measurement.quadratic import evaluate_measurements
from neuralnet.dispatch import loss_and_grad
from neuralnet.training import TrainConfig
from utils.errors import DimensionMismatch, IllConditioned, SeriesTooShort


def _rotation_series(length, angle=0.3, scale=0.98, intercept=(0.05, -0.02)):
    c, s = np.cos(angle), np.sin(angle)
    transition = scale * np.array([[c, -s], [s, c]])
    states = [np.array([1.0, 0.0])]
    for _ in range(length - 1):
        states.append(transition @ states[-1] + np.asarray(intercept))
    return np.array(states), transition


def _smooth_states(length=60, dim=4, seed=0):
    rng = np.random.default_rng(seed)
    t = np.arange(length)[:, None]
    phase = rng.uniform(0, np.pi, size=dim)
    return 1.0 + 0.1 * np.sin(2 * np.pi * t / 12 + phase)


def test_minimal_series_gives_two_windows():
    states = _smooth_states(length=5)
    train, test = make_window_dataset(states, 3)
    assert len(train) == 2
    assert len(test) == 0
    np.testing.assert_array_equal(train.target_times, [3, 4])
    np.testing.assert_array_equal(train.inputs[0], states[0:3])


def test_windows_do_not_leak_across_split():
    states = _smooth_states(length=30)
    train, test = make_window_dataset(states, 3, split=20)
    assert (len(train), len(test)) == window_counts(30, 3, 20) == (17, 7)
    assert train.target_times.max() < 20
    assert test.target_times.min() >= 23
    # every test input comes from at or after the split
    for j, t in enumerate(test.target_times):
        np.testing.assert_array_equal(test.inputs[j], states[t - 3:t])
        assert t - 3 >= 20


def test_window_counts_closed_form():
    assert window_counts(7676, 10, 6176) == (6166, 1490)


def test_short_series_is_rejected():
    with pytest.raises(SeriesTooShort):
        make_window_dataset(_smooth_states(length=4), 3)
    with pytest.raises(SeriesTooShort):
        make_window_dataset(_smooth_states(length=30), 3, split=2)
    with pytest.raises(ValueError):
        make_window_dataset(_smooth_states(length=30), 0)


def test_var1_recovers_linear_dynamics():
    states, transition = _rotation_series(50)
    params = var1_fit(states)
    np.testing.assert_allclose(params.transition, transition, atol=1e-8)
    np.testing.assert_allclose(params.intercept, [0.05, -0.02], atol=1e-8)
    np.testing.assert_allclose(var1_predict(params, states[:-1]), states[1:], atol=1e-8)


def test_var1_constant_series_falls_back_to_ridge():
    states = np.tile([1.0, 0.2, 0.9, -0.1], (20, 1))
    with pytest.warns(IllConditioned):
        params = var1_fit(states)
    np.testing.assert_allclose(var1_predict(params, states[0]), states[0], atol=1e-6)


def test_var1_needs_two_samples():
    with pytest.raises(SeriesTooShort):
        var1_fit(np.ones((1, 2)))


def test_var1_params_dict_round_trip():
    params = var1_fit(_rotation_series(20)[0])
    again = VarParams.from_dict(params.to_dict())
    np.testing.assert_array_equal(again.transition, params.transition)


def test_forecast_stream_is_causal():
    states, _ = _rotation_series(30)
    params = var1_fit(states)
    times, forecasts = forecast_stream(params, states)
    np.testing.assert_array_equal(times, np.arange(1, 30))

    rnn = init_rnn(2, 4, n_layers=2, activation="tanh", seed=1)
    times, before = forecast_stream(rnn, states)
    assert times[0] == 4
    changed = states.copy()
    changed[10:] += 5.0
    _, after = forecast_stream(rnn, changed)
    # forecasts for t <= 10 only see states before t
    keep = times <= 10
    np.testing.assert_array_equal(before[keep], after[keep])
    assert not np.allclose(before[~keep], after[~keep])


def test_forecast_stream_requires_window_for_fnn():
    train, _ = make_window_dataset(_smooth_states(length=20), 3)
    params, _ = train_fnn_forecaster(train, TrainConfig(epochs=1, loss="mse"))
    with pytest.raises(ValueError):
        forecast_stream(params, _smooth_states(length=20))
    times, forecasts = forecast_stream(params, _smooth_states(length=20), window=3)
    assert forecasts.shape == (17, 4)


def test_rnn_matches_explicit_recursion():
    params = init_rnn(4, 3, n_layers=2, widths=[3, 5], activation="tanh", seed=2)
    rng = np.random.default_rng(0)
    window = rng.standard_normal((3, 4))
    t = params.tensors
    h1, h2 = np.zeros(3), np.zeros(5)
    for tau in range(3):
        h1 = np.tanh(t["R_in1"] @ window[tau] + t["R_ss1"] @ h1 + t["r1"])
        h2 = np.tanh(t["R_in2"] @ h1 + t["R_ss2"] @ h2 + t["r2"])
    expected = t["R_out"] @ h2 + t["r_out"]
    np.testing.assert_allclose(rnn_forward(params, window).values, expected, atol=1e-13)


def test_rnn_rejects_wrong_window():
    params = init_rnn(4, 3, n_layers=1, seed=2)
    with pytest.raises(DimensionMismatch):
        rnn_forward(params, np.ones((2, 4)))
    with pytest.raises(ValueError):
        init_rnn(4, 3, n_layers=2, widths=[4])


def test_rnn_gradients_match_finite_differences():
    params = init_rnn(4, 3, n_layers=2, widths=[3, 3], activation="tanh", seed=4)
    rng = np.random.default_rng(1)
    windows = rng.standard_normal((4, 3, 4))
    targets = rng.standard_normal((4, 4))
    analytic = rnn_grad(params, windows, targets)
    h = 1e-6
    for name, tensor in params.tensors.items():
        fd = np.zeros_like(tensor)
        for idx in np.ndindex(tensor.shape):
            plus = {k: a.copy() for k, a in params.tensors.items()}
            minus = {k: a.copy() for k, a in params.tensors.items()}
            plus[name][idx] += h
            minus[name][idx] -= h
            f_plus, _ = loss_and_grad(params.with_tensors(plus), windows, targets, "mse")
            f_minus, _ = loss_and_grad(params.with_tensors(minus), windows, targets, "mse")
            fd[idx] = (f_plus - f_minus) / (2 * h)
        np.testing.assert_allclose(analytic[name], fd, rtol=1e-5, atol=1e-7, err_msg=name)


def test_rnn_training_reduces_loss():
    train, _ = make_window_dataset(_smooth_states(length=80), 4)
    cfg = TrainConfig(epochs=25, batch_size=16, learning_rate=1e-2, loss="mse", seed=1)
    params, history = train_rnn(train, cfg, RnnArch(layers=1, window=4, activation="tanh"))
    assert params.window == 4
    assert history[-1] < history[0]


def test_rnn_arch_window_must_match():
    train, _ = make_window_dataset(_smooth_states(length=20), 4)
    with pytest.raises(DimensionMismatch):
        train_rnn(train, TrainConfig(epochs=1), RnnArch(window=3))


def _measurements(forms, v, missing=()):
    values = evaluate_measurements(forms, v)
    z = MeasurementVector(values=values, mask=np.ones(values.size, dtype=bool),
                          noise_sigmas=np.full(values.size, 0.02))
    mask = np.ones(values.size, dtype=bool)
    mask[list(missing)] = False
    return z.with_mask(mask)


def test_imputation_without_missing_is_identity(two_bus_forms, two_bus_state):
    z = _measurements(two_bus_forms, two_bus_state)
    assert impute_with_forecast(z, np.ones(4), two_bus_forms) is z


def test_imputation_all_missing_uses_forecast(two_bus_forms, two_bus_state):
    z = _measurements(two_bus_forms, two_bus_state, missing=range(4))
    forecast = np.array([1.0, 0.0, 0.95, -0.04])
    filled = impute_with_forecast(z, forecast, two_bus_forms)
    np.testing.assert_allclose(filled.values, evaluate_measurements(two_bus_forms, forecast), atol=1e-15)
    assert filled.imputed.all()
    assert filled.n_missing == 0


def test_imputation_with_true_forecast_restores_clean_values(two_bus_forms, two_bus_state):
    clean = evaluate_measurements(two_bus_forms, two_bus_state)
    z = _measurements(two_bus_forms, two_bus_state, missing=[1, 3])
    filled = impute_with_forecast(z, two_bus_state, two_bus_forms)
    np.testing.assert_allclose(filled.values, clean, atol=1e-15)
    np.testing.assert_array_equal(filled.imputed, [False, True, False, True])
