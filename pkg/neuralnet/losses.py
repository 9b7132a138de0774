"""Regression losses averaged over every entry of the batch"""
import numpy as np

LOSSES = ("huber", "mse")


def huber_loss(pred, target, delta=1.0):
    if delta <= 0:
        raise ValueError("huber delta must be positive")
    e = np.abs(np.asarray(pred, dtype=float) - np.asarray(target, dtype=float))
    return float(np.mean(np.where(e <= delta, 0.5 * e * e, delta * e - 0.5 * delta * delta)))


def huber_grad(pred, target, delta=1.0):
    e = np.asarray(pred, dtype=float) - np.asarray(target, dtype=float)
    return np.clip(e, -delta, delta) / e.size


def mse_loss(pred, target):
    """mean(e^2 / 2)"""
    e = np.asarray(pred, dtype=float) - np.asarray(target, dtype=float)
    return float(np.mean(0.5 * e * e))


def mse_grad(pred, target):
    e = np.asarray(pred, dtype=float) - np.asarray(target, dtype=float)
    return e / e.size


def loss_with_grad(pred, target, loss="huber", delta=1.0):
    """(loss value, d loss / d pred)"""
    if loss == "huber":
        return huber_loss(pred, target, delta), huber_grad(pred, target, delta)
    if loss == "mse":
        return mse_loss(pred, target), mse_grad(pred, target)
    raise ValueError(f"unknown loss '{loss}'; choose from {LOSSES}")
