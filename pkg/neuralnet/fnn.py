"""Plain feed-forward baseline: hidden affine+activation layers, affine output"""
import logging

import numpy as np

from grid.model import StateVector
from neuralnet.activations import activate, check_activation, derivative
from neuralnet.dispatch import backward, forward
from neuralnet.params import ParamSet, fan_in_uniform, register_family
from utils.errors import DimensionMismatch

logger = logging.getLogger(__name__)


@register_family
class FnnParams(ParamSet):
    family = "fnn"

    @property
    def n_hidden(self):
        return self.arch["hidden"]

    @property
    def input_dim(self):
        return self.arch["input_dim"]

    @property
    def output_dim(self):
        return self.arch["output_dim"]

    @property
    def activation(self):
        return self.arch["activation"]


def fnn_param_count(input_dim, output_dim, n_hidden, width=None):
    """h hidden layers of `width` (default input_dim) plus the affine output"""
    width = input_dim if width is None else width
    if n_hidden == 0:
        return output_dim * input_dim + output_dim
    first = width * input_dim + width
    rest = (n_hidden - 1) * (width * width + width)
    return first + rest + output_dim * width + output_dim


def init_fnn(input_dim, output_dim, n_hidden, width=None, activation="relu", seed=0):
    width = input_dim if width is None else width
    rng = np.random.default_rng(seed)
    tensors = {}
    fan = input_dim
    for l in range(n_hidden):
        tensors[f"W{l}"] = fan_in_uniform(rng, (width, fan))
        tensors[f"b{l}"] = np.zeros(width)
        fan = width
    tensors["W_out"] = fan_in_uniform(rng, (output_dim, fan))
    tensors["b_out"] = np.zeros(output_dim)
    arch = {"input_dim": int(input_dim), "output_dim": int(output_dim), "hidden": int(n_hidden),
            "width": int(width), "activation": check_activation(activation)}
    return FnnParams(tensors=tensors, arch=arch)


@forward.register
def _(params: FnnParams, inputs):
    x = np.asarray(inputs, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != params.input_dim:
        raise DimensionMismatch(f"expected inputs of width {params.input_dim}, got shape {np.shape(inputs)}",
                                expected=params.input_dim, found=list(np.shape(inputs)))
    t = params.tensors
    layers = []
    h = x
    for l in range(params.n_hidden):
        pre = h @ t[f"W{l}"].T + t[f"b{l}"]
        layers.append((h, pre))
        h = activate(pre, params.activation)
    out = h @ t["W_out"].T + t["b_out"]
    return out, {"layers": layers, "h": h}


@backward.register
def _(params: FnnParams, cache, dpred):
    t = params.tensors
    grads = {"W_out": dpred.T @ cache["h"], "b_out": dpred.sum(axis=0)}
    dh = dpred @ t["W_out"]
    for l in reversed(range(params.n_hidden)):
        h_in, pre = cache["layers"][l]
        dpre = dh * derivative(pre, params.activation)
        grads[f"W{l}"] = dpre.T @ h_in
        grads[f"b{l}"] = dpre.sum(axis=0)
        dh = dpre @ t[f"W{l}"]
    return {name: grads[name] for name in params.names}


def fnn_forward(params, z):
    out, _ = forward(params, z)
    if np.ndim(z) == 1:
        return StateVector(out[0]) if out.shape[1] % 2 == 0 else out[0]
    return out
