"""ISTA for the inner Lasso subproblem

    min_u ||u||_1 + (M / 4 mu) ||B (u + z) - v||^2

Each step is u <- S_eta(W u + A z + b) with the fixed coefficients below.
"""
import logging
from dataclasses import dataclass

import numpy as np

from solvers.lav import soft_threshold

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IstaCoefficients:
    w: np.ndarray
    a: np.ndarray
    b: np.ndarray
    eta: float


def ista_coefficients(b_mat, v_i, mu_i, eta):
    """W = I - c B^T B, A = -c B^T B, b = c B^T v_i with c = eta M / (2 mu_i)"""
    b_mat = np.asarray(b_mat, dtype=float)
    m = b_mat.shape[1]
    c = eta * m / (2.0 * mu_i)
    gram = b_mat.T @ b_mat
    a = -c * gram
    w = np.eye(m) + a
    bias = c * (b_mat.T @ np.asarray(v_i, dtype=float))
    return IstaCoefficients(w=w, a=a, b=bias, eta=float(eta))


def ista_iterate(coef, z, n_iter, u0):
    """Run n_iter shrinkage steps; returns (u, last step inf-norm)"""
    u = np.array(u0, dtype=float)
    drive = coef.a @ z + coef.b
    residual = 0.0
    for _ in range(n_iter):
        u_next = soft_threshold(coef.w @ u + drive, coef.eta)
        residual = float(np.max(np.abs(u_next - u))) if u.size else 0.0
        u = u_next
    return u, residual


def lasso_objective(b_mat, z, v_i, mu_i, u):
    m = b_mat.shape[1]
    fit = b_mat @ (u + z) - v_i
    return float(np.sum(np.abs(u)) + m / (4.0 * mu_i) * fit @ fit)


def ista_solve(b_mat, z, v_i, mu_i, eta, n_iter, u0=None):
    """K ISTA iterations from u0 (zeros when omitted)"""
    if mu_i <= 0 or eta <= 0:
        raise ValueError("step sizes mu and eta must be positive")
    if n_iter < 1:
        raise ValueError("ISTA needs at least one iteration")
    z = np.asarray(z, dtype=float)
    u0 = np.zeros_like(z) if u0 is None else u0
    coef = ista_coefficients(b_mat, v_i, mu_i, eta)
    u, residual = ista_iterate(coef, z, n_iter, u0)
    logger.debug(f"ISTA: {n_iter} iterations, last step {residual:.3e}")
    return u
