"""Stacked Elman RNN for one-step state forecasting

For tau over the window and layers l = 1..L:

    s^l_tau = f(R_in^l s^{l-1}_tau + R_ss^l s^l_{tau-1} + r^l),  s^0_tau = v_tau

with zero initial hidden states; the forecast is R_out s^L_last + r_out.
"""
import logging

import numpy as np

from grid.model import StateVector
from neuralnet.activations import activate, check_activation, derivative
from neuralnet.dispatch import backward, forward, loss_and_grad
from neuralnet.params import ParamSet, fan_in_uniform, register_family
from utils.errors import DimensionMismatch

logger = logging.getLogger(__name__)


@register_family
class RnnParams(ParamSet):
    family = "rnn"

    @property
    def n_layers(self):
        return len(self.arch["widths"])

    @property
    def widths(self):
        return list(self.arch["widths"])

    @property
    def input_dim(self):
        return self.arch["input_dim"]

    @property
    def output_dim(self):
        return self.arch["output_dim"]

    @property
    def window(self):
        return self.arch["window"]

    @property
    def activation(self):
        return self.arch["activation"]


def init_rnn(input_dim, window, n_layers=3, widths=None, activation="relu", seed=0, output_dim=None):
    """Fan-in uniform weights, zero biases; hidden widths default to the state dimension"""
    if window < 1 or n_layers < 1:
        raise ValueError("window and n_layers must be >= 1")
    widths = [input_dim] * n_layers if widths is None else [int(w) for w in widths]
    if len(widths) != n_layers:
        raise ValueError(f"expected {n_layers} widths, got {len(widths)}")
    output_dim = input_dim if output_dim is None else output_dim
    rng = np.random.default_rng(seed)
    tensors = {}
    fan = input_dim
    for l, width in enumerate(widths, start=1):
        tensors[f"R_in{l}"] = fan_in_uniform(rng, (width, fan))
        tensors[f"R_ss{l}"] = fan_in_uniform(rng, (width, width))
        tensors[f"r{l}"] = np.zeros(width)
        fan = width
    tensors["R_out"] = fan_in_uniform(rng, (output_dim, fan))
    tensors["r_out"] = np.zeros(output_dim)
    arch = {"input_dim": int(input_dim), "output_dim": int(output_dim), "widths": widths,
            "window": int(window), "activation": check_activation(activation)}
    return RnnParams(tensors=tensors, arch=arch)


def _as_windows(params, inputs):
    x = np.asarray(inputs, dtype=float)
    if x.ndim == 2:
        x = x[None]
    if x.ndim != 3 or x.shape[1] != params.window or x.shape[2] != params.input_dim:
        raise DimensionMismatch(
            f"expected windows of shape (S, {params.window}, {params.input_dim}), got {np.shape(inputs)}",
            expected=[params.window, params.input_dim], found=list(np.shape(inputs)))
    return x


@forward.register
def _(params: RnnParams, inputs):
    x = _as_windows(params, inputs)
    t = params.tensors
    batch = x.shape[0]
    hidden = [np.zeros((batch, w)) for w in params.widths]
    steps = []
    for tau in range(params.window):
        below = x[:, tau]
        layer_cache = []
        for l in range(1, params.n_layers + 1):
            prev = hidden[l - 1]
            pre = below @ t[f"R_in{l}"].T + prev @ t[f"R_ss{l}"].T + t[f"r{l}"]
            layer_cache.append((below, prev, pre))
            below = activate(pre, params.activation)
            hidden[l - 1] = below
        steps.append(layer_cache)
    out = hidden[-1] @ t["R_out"].T + t["r_out"]
    return out, {"steps": steps, "top": hidden[-1]}


@backward.register
def _(params: RnnParams, cache, dpred):
    """Backpropagation through time over the whole window"""
    t = params.tensors
    grads = params.zeros_like()
    grads["R_out"] = dpred.T @ cache["top"]
    grads["r_out"] = dpred.sum(axis=0)

    n_layers = params.n_layers
    recurrent = [np.zeros((dpred.shape[0], w)) for w in params.widths]
    recurrent[-1] = dpred @ t["R_out"]
    for layer_cache in reversed(cache["steps"]):
        from_above = None
        for l in range(n_layers, 0, -1):
            below, prev, pre = layer_cache[l - 1]
            ds = recurrent[l - 1] if from_above is None else recurrent[l - 1] + from_above
            dpre = ds * derivative(pre, params.activation)
            grads[f"R_in{l}"] += dpre.T @ below
            grads[f"R_ss{l}"] += dpre.T @ prev
            grads[f"r{l}"] += dpre.sum(axis=0)
            from_above = dpre @ t[f"R_in{l}"]
            recurrent[l - 1] = dpre @ t[f"R_ss{l}"]
    return grads


def rnn_forward(params, window):
    """Forecast v_{t+1} from one window (r, 2N) or a batch (S, r, 2N)"""
    window = np.asarray([np.asarray(w, dtype=float) for w in window]) if isinstance(window, list) else window
    out, _ = forward(params, window)
    if np.ndim(window) == 2:
        return StateVector(out[0])
    return out


def rnn_grad(params, windows, targets, loss="mse", delta=1.0):
    """Exact BPTT gradients of the mean batch loss"""
    return loss_and_grad(params, windows, targets, loss, delta)[1]
