"""Gauss-Newton weighted least squares baseline"""
import logging
import time

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from grid.model import StateVector
from measurement.quadratic import as_form_set, evaluate_measurements, jacobian_at
from solvers.prox_linear import SolveTrace, check_measurements, initial_state, pin_reference
from utils.errors import Diverged, SingularGain

logger = logging.getLogger(__name__)

BLOWUP_NORM = 1e6


def wls_objective(forms, z, v, weights):
    r = z - evaluate_measurements(forms, v)
    return float(np.sum(weights * r * r))


def gauss_newton_wls(forms, z, weights=None, init="flat", max_iter=30, tol=1e-10, strict=False):
    """Minimize sum_m w_m (z_m - v^T H_m v)^2; returns (StateVector, SolveTrace)

    Running out of iterations before the step meets `tol` raises Diverged when
    `strict`; otherwise the last iterate is returned with stop_reason "max_iter".
    """
    forms = as_form_set(forms)
    z = check_measurements(forms, z)
    weights = np.ones(forms.n_measurements) if weights is None else np.asarray(weights, dtype=float)
    if weights.shape != z.shape or np.any(weights <= 0):
        raise ValueError("weights must be positive, one per measurement")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")

    free = forms.free_coords()
    v = pin_reference(initial_state(init, forms.n_state // 2), forms.reference_coord)
    trace = SolveTrace(method="gauss_newton")
    trace.record(v, wls_objective(forms, z, v, weights))

    for it in range(1, max_iter + 1):
        start = time.perf_counter()
        residual = z - evaluate_measurements(forms, v)
        g = 2.0 * jacobian_at(forms, v)[:, free]
        gw = g.T * weights
        gain = gw @ g
        try:
            factor = cho_factor(gain)
        except LinAlgError as e:
            raise SingularGain(f"gain matrix is not positive definite at iteration {it}: {e}", iteration=it)
        dx = cho_solve(factor, gw @ residual)
        if not np.all(np.isfinite(dx)):
            raise SingularGain(f"gain solve produced non-finite step at iteration {it}", iteration=it)

        v = v.copy()
        v[free] += dx
        if not np.all(np.isfinite(v)) or np.linalg.norm(v) > BLOWUP_NORM:
            raise Diverged(f"Gauss-Newton iterate blew up at iteration {it}", iteration=it)

        step = float(np.max(np.abs(dx)))
        objective = wls_objective(forms, z, v, weights)
        trace.record(v, objective, inner_residual=step, elapsed=time.perf_counter() - start)
        logger.debug(f"Gauss-Newton iteration {it}: WLS {objective:.6e}, step {step:.3e}")
        if step <= tol:
            trace.converged = True
            trace.stop_reason = "tol"
            break
    else:
        trace.stop_reason = "max_iter"
        if strict:
            raise Diverged(f"Gauss-Newton did not meet tol {tol:g} in {max_iter} iterations",
                           iterations=max_iter, step=step)
        logger.warning(f"Gauss-Newton stopped after {max_iter} iterations without meeting tol {tol:g}")

    return StateVector(v), trace
