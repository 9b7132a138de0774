import logging
import time
from abc import ABC, abstractmethod

import numpy as np

from forecaster.training import forecast_stream
from forecaster.windows import series_array
from grid.model import state_array
from measurement.noise import MeasurementVector
from measurement.quadratic import as_form_set
from utils.errors import DimensionMismatch


def measurement_values(z):
    """Plain float vector from a MeasurementVector (missing entries zero-filled) or array"""
    if isinstance(z, MeasurementVector):
        return z.zero_filled()
    return np.asarray(z, dtype=float)


class Component:
    """Status, failure accounting and action logging shared by estimators, forecasters and monitors"""

    def __init__(self, artifacts=None, config=None):
        self.logger = logging.getLogger(f"estimator.{self.__class__.__name__}")
        self.artifacts = artifacts
        self.config = config or {}
        self.name = self.__class__.__name__
        self.status = "initialized"
        self.last_action_time = time.time()
        self.failure_count = 0
        self.train_time = 0.0

    @property
    def method(self):
        """Short method tag used in reports"""
        return self.name

    def initialize(self):
        self.logger.info(f"Initializing {self.name}")
        self.status = "ready"
        return True

    def get_status(self):
        return {
            "status": self.status,
            "last_action": time.time() - self.last_action_time,
            "failures": self.failure_count,
            "train_time": self.train_time,
        }

    def log_action(self, action, details=None):
        """Log an action taken by this component"""
        self.last_action_time = time.time()

        action_log = {
            "estimator": self.name,
            "action": action,
            "timestamp": self.last_action_time,
            "details": details or {},
        }

        if self.artifacts is not None:
            self.artifacts.log_action(action_log)
        return action_log


class BaseEstimator(Component, ABC):
    """A state estimator over a fixed measurement model"""

    def __init__(self, forms, artifacts=None, config=None):
        super().__init__(artifacts, config)
        self.forms = as_form_set(forms)
        self.inference_times = []

    def fit(self, dataset):
        """Estimators without trainable parameters have nothing to fit"""
        return self

    @abstractmethod
    def estimate(self, z):
        """Single-sample state estimate as a StateVector"""

    def _estimate_many(self, values, samples):
        return np.array([state_array(self.estimate(z)) for z in samples])

    def estimate_batch(self, measurements):
        """(S, 2N) estimates for S measurement vectors; records the per-sample time"""
        samples = list(measurements)
        values = np.atleast_2d(np.array([measurement_values(z) for z in samples], dtype=float))
        if values.shape[1] != self.forms.n_measurements:
            raise DimensionMismatch(f"expected {self.forms.n_measurements} measurements per sample, "
                                    f"got {values.shape[1]}",
                                    expected=self.forms.n_measurements, found=values.shape[1])
        self.status = "estimating"
        start = time.perf_counter()
        estimates = self._estimate_many(values, samples)
        elapsed = time.perf_counter() - start
        per_sample = elapsed / max(values.shape[0], 1)
        self.inference_times.append(per_sample)
        self.status = "ready"
        self.log_action("estimate_batch", {"samples": int(values.shape[0]), "per_sample_s": per_sample})
        return estimates


class BaseForecaster(Component, ABC):
    """One-step state forecaster over windows of past states"""

    def __init__(self, window, artifacts=None, config=None):
        if window < 1:
            raise ValueError("window must be >= 1")
        super().__init__(artifacts, config)
        self.window = int(window)
        self.model = None

    @abstractmethod
    def fit(self, states):
        """Fit on a (T, 2N) training series"""

    @abstractmethod
    def forecast(self, history):
        """Forecast the next state from the last `window` states of history"""

    def _history(self, history):
        states = np.asarray([state_array(v) for v in history], dtype=float)
        if states.ndim != 2 or states.shape[0] < self.window:
            raise DimensionMismatch(f"{self.name} needs {self.window} past states, got {states.shape[0]}",
                                    expected=self.window, found=int(states.shape[0]))
        return states[-self.window:]

    def forecast_series(self, states):
        """Causal one-step forecasts over a whole series; returns (times, forecasts)"""
        return forecast_stream(self.model, series_array(states), window=self.window)
