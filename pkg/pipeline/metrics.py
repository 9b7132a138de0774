"""Error metrics on rectangular state vectors"""
import numpy as np

from grid.model import state_array
from utils.errors import DimensionMismatch


def _pair(v_hat, v):
    a = np.asarray(state_array(v_hat), dtype=float)
    b = np.asarray(state_array(v), dtype=float)
    if a.shape != b.shape or a.shape[-1] % 2:
        raise DimensionMismatch(f"state shapes differ or are odd: {a.shape} vs {b.shape}",
                                estimate=list(a.shape), truth=list(b.shape))
    return a, b


def rmse(v_hat, v, n_buses=None):
    """||v_hat - v||_2 / N"""
    a, b = _pair(v_hat, v)
    n = a.shape[-1] // 2 if n_buses is None else n_buses
    return float(np.linalg.norm(a - b) / n)


def rmse_per_sample(v_hat, v):
    """Normalized RMSE for each row of (S, 2N) arrays"""
    a, b = _pair(v_hat, v)
    a, b = np.atleast_2d(a), np.atleast_2d(b)
    return np.linalg.norm(a - b, axis=1) / (a.shape[1] // 2)


def polar_errors(v_hat, v):
    """Per-bus magnitude error and wrapped angle error (radians)"""
    a, b = _pair(v_hat, v)
    va = a[..., 0::2] + 1j * a[..., 1::2]
    vb = b[..., 0::2] + 1j * b[..., 1::2]
    magnitude = np.abs(va) - np.abs(vb)
    angle = np.angle(va * np.conj(vb))
    return magnitude, angle


def summarize(values):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return {"mean": None, "std": None, "count": 0}
    return {"mean": float(values.mean()), "std": float(values.std()), "count": int(values.size)}
