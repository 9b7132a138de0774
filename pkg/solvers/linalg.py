"""Dense linear algebra helpers shared by the solvers and the unrolled net"""
import logging

import numpy as np
from scipy.linalg import qr, solve_triangular

from utils.errors import RankDeficient

logger = logging.getLogger(__name__)

RANK_TOL = 1e-10
POWER_ITERATIONS = 20


def pseudo_inverse(jac, rank_tol=RANK_TOL):
    """Left inverse B = R^-1 Q^T of a tall full-column-rank matrix"""
    jac = np.asarray(jac, dtype=float)
    if jac.ndim != 2 or jac.shape[0] < jac.shape[1]:
        raise RankDeficient(f"need a tall matrix, got shape {jac.shape}", shape=list(jac.shape))
    q, r = qr(jac, mode="economic")
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag.min() <= rank_tol * diag.max():
        raise RankDeficient(
            f"Jacobian is rank deficient (min |R_ii| = {diag.min() if diag.size else 0:.3e})",
            min_diag=float(diag.min()) if diag.size else 0.0,
            max_diag=float(diag.max()) if diag.size else 0.0)
    return solve_triangular(r, q.T, lower=False)


def lambda_max(b, iterations=POWER_ITERATIONS):
    """Largest eigenvalue of B B^T (equal to that of B^T B) by power iteration"""
    b = np.asarray(b, dtype=float)
    gram = b @ b.T
    x = np.ones(gram.shape[0]) / np.sqrt(gram.shape[0])
    lam = 0.0
    for _ in range(iterations):
        y = gram @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        x = y / norm
        lam = float(x @ (gram @ x))
    return lam
