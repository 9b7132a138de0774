"""Iterative-solver estimators: prox-linear LAV and Gauss-Newton WLS"""
import numpy as np

from estimators.base_estimator import BaseEstimator, measurement_values
from solvers.gauss_newton import gauss_newton_wls
from solvers.prox_linear import ProxLinearConfig, prox_linear_lav


class ProxLinearEstimator(BaseEstimator):
    """Robust LAV estimates from the prox-linear solver"""

    method = "prox-linear"

    def __init__(self, forms, cfg=None, artifacts=None, config=None):
        super().__init__(forms, artifacts, config)
        self.cfg = cfg or ProxLinearConfig.from_config(self.config)
        self.last_trace = None

    def estimate(self, z):
        v, trace = prox_linear_lav(self.forms, measurement_values(z), self.cfg)
        self.last_trace = trace
        if not trace.converged:
            self.logger.debug(f"prox-linear stopped by {trace.stop_reason} after {trace.iterations} iterations")
        return v


class GaussNewtonEstimator(BaseEstimator):
    """WLS estimates by Gauss-Newton; unweighted unless `weighted` is set

    Weighted runs use 1/sigma^2 from the measurement vector's noise sigmas,
    falling back to unit weight on noiseless channels.
    """

    method = "gauss-newton"

    def __init__(self, forms, weighted=False, init=None, max_iter=None, tol=None, artifacts=None, config=None):
        super().__init__(forms, artifacts, config)
        self.weighted = weighted
        self.init = init or self.config.get("gn_init", "flat")
        self.max_iter = int(max_iter or self.config.get("gn_max_iter", 30))
        self.tol = float(tol if tol is not None else self.config.get("gn_tol", 1e-10))
        self.strict = bool(self.config.get("gn_strict", False))
        self.last_trace = None

    def _weights(self, z):
        if not self.weighted or not hasattr(z, "noise_sigmas"):
            return None
        sigmas = np.asarray(z.noise_sigmas, dtype=float)
        return np.where(sigmas > 0, 1.0 / np.where(sigmas > 0, sigmas, 1.0) ** 2, 1.0)

    def estimate(self, z):
        v, trace = gauss_newton_wls(self.forms, measurement_values(z), weights=self._weights(z), init=self.init,
                                    max_iter=self.max_iter, tol=self.tol, strict=self.strict)
        self.last_trace = trace
        return v
