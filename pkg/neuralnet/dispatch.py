"""Family-generic entry points; each network module registers its own implementation"""
from functools import singledispatch

from neuralnet.losses import loss_with_grad


@singledispatch
def forward(params, inputs):
    """Batched forward pass returning (predictions, cache for backward)"""
    raise TypeError(f"no forward pass registered for {type(params).__name__}")


@singledispatch
def backward(params, cache, dpred):
    """Gradients of sum(dpred * predictions) for every tensor"""
    raise TypeError(f"no backward pass registered for {type(params).__name__}")


def predict(params, inputs):
    return forward(params, inputs)[0]


def loss_and_grad(params, inputs, targets, loss="huber", delta=1.0):
    pred, cache = forward(params, inputs)
    value, dpred = loss_with_grad(pred, targets, loss, delta)
    return value, backward(params, cache, dpred)


def grad(params, inputs, targets, loss="huber", delta=1.0):
    """Exact gradients of the mean batch loss"""
    return loss_and_grad(params, inputs, targets, loss, delta)[1]
