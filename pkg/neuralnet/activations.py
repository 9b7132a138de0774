"""Element-wise activations and their derivatives at the pre-activation"""
import numpy as np

ACTIVATIONS = ("relu", "soft_threshold", "tanh", "linear")


def check_activation(name):
    if name not in ACTIVATIONS:
        raise ValueError(f"unknown activation '{name}'; choose from {ACTIVATIONS}")
    return name


def activate(x, name, threshold=0.0):
    if name == "relu":
        return np.maximum(x, 0.0)
    if name == "soft_threshold":
        return np.sign(x) * np.maximum(np.abs(x) - threshold, 0.0)
    if name == "tanh":
        return np.tanh(x)
    if name == "linear":
        return x
    raise ValueError(f"unknown activation '{name}'")


def derivative(x, name, threshold=0.0):
    """Slope at x; kinks (ReLU origin, |x| = threshold) take slope 0"""
    if name == "relu":
        return (x > 0).astype(float)
    if name == "soft_threshold":
        return (np.abs(x) > threshold).astype(float)
    if name == "tanh":
        return 1.0 - np.tanh(x) ** 2
    if name == "linear":
        return np.ones_like(x)
    raise ValueError(f"unknown activation '{name}'")
