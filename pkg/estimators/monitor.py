"""Closed-loop monitoring: estimate, forecast, impute missing telemetry, estimate again"""
from dataclasses import dataclass

import numpy as np

from estimators.base_estimator import Component
from forecaster.imputation import impute_with_forecast
from grid.model import state_array
from pipeline.metrics import rmse, summarize


@dataclass
class MonitorResult:
    times: np.ndarray
    truth: np.ndarray
    imputed: np.ndarray
    zero_filled: np.ndarray
    forecasts: np.ndarray
    n_missing: np.ndarray
    missing_rate: float
    seed: int

    @property
    def imputed_rmse(self):
        return np.array([rmse(a, b) for a, b in zip(self.imputed, self.truth)])

    @property
    def zero_fill_rmse(self):
        return np.array([rmse(a, b) for a, b in zip(self.zero_filled, self.truth)])

    @property
    def forecast_rmse(self):
        return np.array([rmse(a, b) for a, b in zip(self.forecasts, self.truth)])

    @property
    def improved(self):
        """Mean imputed RMSE strictly below mean zero-fill RMSE"""
        return bool(self.imputed_rmse.mean() < self.zero_fill_rmse.mean())

    def to_dict(self):
        return {
            "missing_rate": self.missing_rate,
            "seed": self.seed,
            "steps": int(self.times.size),
            "missing": int(self.n_missing.sum()),
            "imputed_rmse": summarize(self.imputed_rmse),
            "zero_fill_rmse": summarize(self.zero_fill_rmse),
            "forecast_rmse": summarize(self.forecast_rmse),
            "improved": self.improved,
        }


class StateMonitor(Component):
    """Runs the estimate -> forecast -> impute loop over a measurement stream

    The first `window` steps see complete measurements and only seed the
    forecaster's history; every later step loses each reading independently
    with probability `missing_rate`.
    """

    def __init__(self, estimator, forecaster, missing_rate=0.1, seed=0, artifacts=None):
        if not 0.0 <= missing_rate < 1.0:
            raise ValueError(f"missing_rate must lie in [0, 1), got {missing_rate}")
        super().__init__(artifacts)
        self.estimator = estimator
        self.forecaster = forecaster
        self.missing_rate = float(missing_rate)
        self.seed = int(seed)

    def initialize(self):
        self.logger.info(f"Initializing {self.name} (missing rate {self.missing_rate:g})")
        self.status = "ready"
        return True

    def run(self, dataset, seed=None):
        seed = self.seed if seed is None else int(seed)
        rng = np.random.default_rng(seed)
        forms = self.estimator.forms
        window = self.forecaster.window
        if len(dataset) <= window:
            raise ValueError(f"stream of {len(dataset)} samples leaves no step after a window of {window}")

        history = []
        rows = {"times": [], "truth": [], "imputed": [], "zero": [], "forecast": [], "missing": []}
        self.status = "running"
        for j, (t, z, v) in enumerate(dataset.samples()):
            if j < window:
                history.append(state_array(self.estimator.estimate(z)))
                continue
            mask = (rng.random(len(z)) >= self.missing_rate) & z.mask
            z_masked = z.with_mask(mask)
            v_check = self.forecaster.forecast(history)
            v_imputed = state_array(self.estimator.estimate(impute_with_forecast(z_masked, v_check, forms)))
            v_zero = state_array(self.estimator.estimate(z_masked))

            rows["times"].append(t)
            rows["truth"].append(state_array(v))
            rows["imputed"].append(v_imputed)
            rows["zero"].append(v_zero)
            rows["forecast"].append(state_array(v_check))
            rows["missing"].append(z_masked.n_missing)
            history = history[1 - window:] + [v_imputed] if window > 1 else [v_imputed]

        result = MonitorResult(times=np.asarray(rows["times"]), truth=np.array(rows["truth"]),
                               imputed=np.array(rows["imputed"]), zero_filled=np.array(rows["zero"]),
                               forecasts=np.array(rows["forecast"]), n_missing=np.asarray(rows["missing"]),
                               missing_rate=self.missing_rate, seed=seed)
        self.status = "ready"
        summary = result.to_dict()
        self.logger.info(f"Monitor run (seed {seed}): imputed RMSE {summary['imputed_rmse']['mean']:.4e}, "
                         f"zero-fill RMSE {summary['zero_fill_rmse']['mean']:.4e}")
        self.log_action("run", summary)
        return result

