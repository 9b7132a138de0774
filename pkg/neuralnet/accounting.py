"""Closed-form parameter tallies"""
from neuralnet.fnn import FnnParams, fnn_param_count
from neuralnet.proxlinear_net import ProxLinearNetParams, proxlinear_param_count


def param_count(params):
    """Parameter count implied by the architecture descriptor"""
    if isinstance(params, ProxLinearNetParams):
        return proxlinear_param_count(params.input_dim, params.output_dim, params.n_blocks, params.n_layers)
    if isinstance(params, FnnParams):
        return fnn_param_count(params.input_dim, params.output_dim, params.n_hidden, params.arch.get("width"))
    return params.param_count
