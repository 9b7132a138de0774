"""Unrolled prox-linear network

Block i (0..I) runs K layers u <- act(W_i^k u + A_i z + b_i^k), the
measurement vector z entering every layer through A_i. u starts at zero in
the first block and carries over between blocks. The output layer reads
v = B_u u + B_z z.
"""
import dataclasses
import logging

import numpy as np

from grid.model import StateVector
from measurement.quadratic import as_form_set
from neuralnet.activations import activate, check_activation, derivative
from neuralnet.dispatch import backward, forward
from neuralnet.params import ParamSet, fan_in_uniform, perturb_tensors, register_family
from solvers.ista import ista_coefficients
from solvers.linalg import lambda_max
from solvers.prox_linear import ProxLinearConfig, auto_eta, linearization_path, reduced_inverse
from utils.errors import DimensionMismatch

logger = logging.getLogger(__name__)


@register_family
class ProxLinearNetParams(ParamSet):
    family = "proxlinear"

    @property
    def n_blocks(self):
        return self.arch["blocks"]

    @property
    def n_layers(self):
        return self.arch["layers"]

    @property
    def input_dim(self):
        return self.arch["m"]

    @property
    def output_dim(self):
        return self.arch["dim"]

    @property
    def activation(self):
        return self.arch["activation"]

    def threshold(self, block):
        return self.arch["thresholds"][block]

    @property
    def hidden_layers(self):
        return self.n_blocks * self.n_layers


def proxlinear_param_count(m, dim, n_blocks, n_layers):
    """(I+1)(M^2 + K(M^2 + M)) + 2 * 2N * M"""
    return n_blocks * (m * m + n_layers * (m * m + m)) + 2 * dim * m


def _arch(m, dim, n_blocks, n_layers, activation, thresholds):
    return {"m": int(m), "dim": int(dim), "blocks": int(n_blocks), "layers": int(n_layers),
            "activation": check_activation(activation), "thresholds": [float(t) for t in thresholds]}


def init_proxlinear(forms, cfg=None, v_init=None, perturb=0.0, seed=0, activation="relu", z_ref=None):
    """Tied initialization from the solver's coefficients along its linearization path

    Every block i gets W_i^k = I - c_i B_i^T B_i, A_i = -c_i B_i^T B_i and
    b_i^k = c_i B_i^T v_i with c_i = eta_i M / (2 mu_i); the output layer
    uses B_u = B_z = B_I.
    """
    forms = as_form_set(forms)
    cfg = cfg or ProxLinearConfig()
    if v_init is not None:
        cfg = dataclasses.replace(cfg, init_state=v_init, path=None)
    m = forms.n_measurements
    path = linearization_path(forms, z_ref, cfg)

    tensors = {}
    thresholds = []
    b_mat = None
    for i in range(cfg.outer_iters + 1):
        b_mat = reduced_inverse(forms, path[i])
        mu = cfg.mu_at(i, m)
        eta = cfg.eta if cfg.eta is not None else auto_eta(mu, m, lambda_max(b_mat))
        coef = ista_coefficients(b_mat, path[i], mu, eta)
        tensors[f"A{i}"] = coef.a.copy()
        for k in range(1, cfg.inner_iters + 1):
            tensors[f"W{i}_{k}"] = coef.w.copy()
            tensors[f"b{i}_{k}"] = coef.b.copy()
        thresholds.append(eta)
    tensors["B_u"] = b_mat.copy()
    tensors["B_z"] = b_mat.copy()

    params = ProxLinearNetParams(
        tensors=_ordered(tensors, cfg.outer_iters + 1, cfg.inner_iters),
        arch=_arch(m, forms.n_state, cfg.outer_iters + 1, cfg.inner_iters, activation, thresholds))
    logger.debug(f"Initialized prox-linear net from solver path: {params.n_blocks} blocks x "
                 f"{params.n_layers} layers, {params.param_count} parameters")
    return perturb_tensors(params, perturb, seed)


def init_proxlinear_random(m, dim, n_blocks=2, n_layers=3, activation="relu", seed=0, threshold=0.0):
    """Fan-in uniform weights and zero biases; thresholds apply to soft-threshold activations"""
    rng = np.random.default_rng(seed)
    tensors = {}
    for i in range(n_blocks):
        tensors[f"A{i}"] = fan_in_uniform(rng, (m, m))
        for k in range(1, n_layers + 1):
            tensors[f"W{i}_{k}"] = fan_in_uniform(rng, (m, m))
            tensors[f"b{i}_{k}"] = np.zeros(m)
    tensors["B_u"] = fan_in_uniform(rng, (dim, m))
    tensors["B_z"] = fan_in_uniform(rng, (dim, m))
    return ProxLinearNetParams(tensors=_ordered(tensors, n_blocks, n_layers),
                               arch=_arch(m, dim, n_blocks, n_layers, activation, [threshold] * n_blocks))


def _ordered(tensors, n_blocks, n_layers):
    names = []
    for i in range(n_blocks):
        names.append(f"A{i}")
        for k in range(1, n_layers + 1):
            names += [f"W{i}_{k}", f"b{i}_{k}"]
    names += ["B_u", "B_z"]
    return {name: tensors[name] for name in names}


def _as_batch(z, m):
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    batch = z[None, :] if single else z
    if batch.ndim != 2 or batch.shape[1] != m:
        raise DimensionMismatch(f"expected inputs with {m} measurements, got shape {z.shape}",
                                expected=m, found=list(z.shape))
    return batch, single


@forward.register
def _(params: ProxLinearNetParams, inputs):
    z, _ = _as_batch(inputs, params.input_dim)
    t = params.tensors
    u = np.zeros_like(z)
    layers = []
    for i in range(params.n_blocks):
        drive_z = z @ t[f"A{i}"].T
        eta = params.threshold(i)
        for k in range(1, params.n_layers + 1):
            pre = u @ t[f"W{i}_{k}"].T + (drive_z + t[f"b{i}_{k}"])
            layers.append((i, k, u, pre))
            u = activate(pre, params.activation, eta)
    out = u @ t["B_u"].T + z @ t["B_z"].T
    return out, {"z": z, "layers": layers, "u": u}


@backward.register
def _(params: ProxLinearNetParams, cache, dpred):
    t = params.tensors
    z = cache["z"]
    grads = params.zeros_like()
    grads["B_u"] = dpred.T @ cache["u"]
    grads["B_z"] = dpred.T @ z
    du = dpred @ t["B_u"]
    for i, k, u_in, pre in reversed(cache["layers"]):
        dpre = du * derivative(pre, params.activation, params.threshold(i))
        grads[f"W{i}_{k}"] = dpre.T @ u_in
        grads[f"b{i}_{k}"] = dpre.sum(axis=0)
        grads[f"A{i}"] += dpre.T @ z
        du = dpre @ t[f"W{i}_{k}"]
    return grads


def proxlinear_forward(params, z):
    """State estimate(s) for one measurement vector or a (S, M) batch"""
    out, _ = forward(params, z)
    if np.ndim(z) == 1:
        return StateVector(out[0])
    return out
