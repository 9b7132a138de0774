from solvers.gauss_newton import gauss_newton_wls, wls_objective
from solvers.ista import ista_coefficients, ista_solve, lasso_objective
from solvers.lav import lav_objective, soft_threshold
from solvers.linalg import lambda_max, pseudo_inverse
from solvers.prox_linear import (
    ProxLinearConfig,
    SolveTrace,
    initial_state,
    linearization_path,
    pin_reference,
    prox_linear_lav,
    reduced_inverse,
)
