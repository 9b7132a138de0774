"""Least-absolute-value data fit and its proximal operator"""
import numpy as np

from grid.model import state_array
from measurement.quadratic import as_form_set, evaluate_measurements
from utils.errors import DimensionMismatch


def lav_objective(forms, z, v):
    """(1/M) sum_m |z_m - v^T H_m v|"""
    forms = as_form_set(forms)
    z = np.asarray(z, dtype=float)
    if z.shape != (forms.n_measurements,):
        raise DimensionMismatch(f"expected {forms.n_measurements} measurements, got {z.shape}",
                                expected=forms.n_measurements, found=list(z.shape))
    residual = z - evaluate_measurements(forms, state_array(v, forms.n_state))
    return float(np.mean(np.abs(residual)))


def soft_threshold(x, eta):
    """Entry-wise shrinkage toward zero by eta"""
    if np.any(np.asarray(eta) < 0):
        raise ValueError("soft threshold must be non-negative")
    x = np.asarray(x, dtype=float)
    out = np.sign(x) * np.maximum(np.abs(x) - eta, 0.0)
    return float(out) if out.ndim == 0 else out
