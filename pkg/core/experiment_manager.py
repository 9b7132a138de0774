import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import psutil

from estimators.forecasters import build_forecaster
from estimators.monitor import StateMonitor
from estimators.network_estimators import FnnEstimator, ProxNetEstimator
from estimators.solver_estimators import GaussNewtonEstimator, ProxLinearEstimator
from forecaster.windows import make_window_dataset
from neuralnet.training import TrainConfig
from pipeline.dataset import split_dataset
from pipeline.metrics import rmse_per_sample, summarize

PSSE_METHODS = ("proxnet", "fnn", "prox-linear", "gauss-newton")
FORECAST_METHODS = ("rnn", "var1", "fnn2")
SOLVER_METHODS = ("prox-linear", "gauss-newton")


@dataclass
class MethodResult:
    """Per-method aggregate over seeded runs; arrays are kept from the first run"""
    name: str
    rmses: List[float] = field(default_factory=list)
    inference_times: List[float] = field(default_factory=list)
    train_times: List[float] = field(default_factory=list)
    failures: int = 0
    per_sample_rmse: Optional[np.ndarray] = None
    estimates: Optional[np.ndarray] = None
    truth: Optional[np.ndarray] = None
    times: Optional[np.ndarray] = None

    def add_run(self, estimates, truth, times, inference_time=None, train_time=None):
        errors = rmse_per_sample(estimates, truth)
        self.rmses.append(float(errors.mean()))
        if inference_time is not None:
            self.inference_times.append(float(inference_time))
        if train_time is not None:
            self.train_times.append(float(train_time))
        if self.estimates is None:
            self.per_sample_rmse = errors
            self.estimates = np.asarray(estimates, dtype=float)
            self.truth = np.asarray(truth, dtype=float)
            self.times = np.asarray(times)

    def metrics(self):
        return {"rmse": summarize(self.rmses), "runs": len(self.rmses), "failures": self.failures}

    def timings(self):
        return {"inference_per_sample_s": summarize(self.inference_times), "train_s": summarize(self.train_times)}


def resource_snapshot():
    """Process memory and CPU figures for timing reports"""
    process = psutil.Process()
    return {
        "rss_bytes": int(process.memory_info().rss),
        "cpu_count": psutil.cpu_count(),
        "cpu_percent": psutil.cpu_percent(interval=None),
    }


class ExperimentManager:
    """Builds estimators for a run and executes them with failure accounting"""

    def __init__(self, config, artifacts=None):
        self.logger = logging.getLogger(__name__)
        self.config = config
        self.artifacts = artifacts
        self.running = False

        # Error tracking
        self.error_history = {}
        self.failure_counts = {}
        self.max_failures = 3

        self.logger.info("Experiment manager initialized")

    def safe_execute(self, component, method_name, *args, **kwargs):
        """Call a component method; failures are logged and counted, and None is returned"""
        name = getattr(component, "method", component.__class__.__name__)

        if self.failure_counts.get(name, 0) >= self.max_failures:
            self.logger.warning(f"{name} failed {self.failure_counts[name]} times, skipping {method_name}")
            return None

        method = getattr(component, method_name, None)
        if not method:
            self.logger.error(f"Method {method_name} not found on {name}")
            self._record_error("missing_method", f"{name}.{method_name}")
            return None

        try:
            self.logger.debug(f"Executing {method_name} on {name}")
            result = method(*args, **kwargs)
            self.failure_counts[name] = 0
            return result
        except Exception as e:
            self.logger.error(f"Error executing {method_name} on {name}: {e}", exc_info=True)
            self._record_error(f"{name}_{method_name}_error", str(e))
            self.failure_counts[name] = self.failure_counts.get(name, 0) + 1
            if hasattr(component, "failure_count"):
                component.failure_count += 1
            if hasattr(component, "get_status"):
                status = component.get_status()
                self.error_history[f"{name}_{method_name}_error"]["component"] = {
                    "status": status["status"], "failures": status["failures"]}
            return None

    def _record_error(self, error_type, message):
        entry = self.error_history.setdefault(error_type, {"count": 0, "last_message": None})
        entry["count"] += 1
        entry["last_message"] = message

    def _train_config(self, seed):
        return TrainConfig.from_config(self.config, seed=seed)

    def build_psse_estimators(self, forms, methods=None, seed=None):
        """Fresh estimators for one run; "fnn" expands to one baseline per configured depth"""
        seed = self.config.get("seed", 0) if seed is None else seed
        estimators = []
        for method in methods or PSSE_METHODS:
            if method == "proxnet":
                estimators.append(ProxNetEstimator(forms, train_cfg=self._train_config(seed),
                                                   artifacts=self.artifacts, config=self.config))
            elif method == "fnn":
                for depth in self.config.get("fnn_layers", [6, 8]):
                    estimators.append(FnnEstimator(forms, hidden_layers=int(depth), train_cfg=self._train_config(seed),
                                                   artifacts=self.artifacts, config=self.config))
            elif method == "prox-linear":
                estimators.append(ProxLinearEstimator(forms, artifacts=self.artifacts, config=self.config))
            elif method == "gauss-newton":
                estimators.append(GaussNewtonEstimator(forms, artifacts=self.artifacts, config=self.config))
            else:
                raise ValueError(f"unknown PSSE method '{method}'; choose from {PSSE_METHODS}")
        return estimators

    def score_estimator(self, estimator, test, result, train=None):
        """Fit (when `train` is given) and evaluate one estimator on a test split"""
        self.safe_execute(estimator, "initialize")
        if train is not None and self.safe_execute(estimator, "fit", train) is None:
            result.failures += 1
            return None
        estimates = self.safe_execute(estimator, "estimate_batch", [z for _, z, _ in test.samples()])
        if estimates is None:
            result.failures += 1
            return None
        result.add_run(estimates, test.states, test.times, inference_time=estimator.inference_times[-1],
                       train_time=estimator.train_time)
        return estimates

    def run_psse_bench(self, forms, dataset, methods=None):
        """Train/test every method over `runs` seeds

        Deterministic solvers are evaluated once; learned methods once per seed.
        """
        runs = int(self.config.get("runs", 1))
        base_seed = int(self.config.get("seed", 0))
        train, test = split_dataset(dataset, int(self.config.get("train_size", len(dataset) // 2)),
                                    self.config.get("test_size"))
        results = {}
        self.running = True
        self.logger.info(f"PSSE bench: {len(train)} train / {len(test)} test samples, {runs} run(s)")

        for run in range(runs):
            for estimator in self.build_psse_estimators(forms, methods, seed=base_seed + run):
                result = results.setdefault(estimator.method, MethodResult(name=estimator.method))
                if run > 0 and estimator.method in SOLVER_METHODS:
                    continue
                if self.score_estimator(estimator, test, result, train=train) is not None:
                    self.logger.info(f"Run {run + 1}/{runs} {estimator.method}: test RMSE {result.rmses[-1]:.4e}")

        self.running = False
        return results

    def estimated_series(self, estimator, dataset):
        """Voltage estimates for every sample, used to train forecasters on estimates"""
        self.safe_execute(estimator, "initialize")
        return estimator.estimate_batch([z for _, z, _ in dataset.samples()])

    def score_forecaster(self, forecaster, inputs, dataset, start, result):
        """One-step forecasts over `inputs`, scored against ground truth for targets at index >= start"""
        t0 = time.perf_counter()
        output = self.safe_execute(forecaster, "forecast_series", inputs)
        elapsed = time.perf_counter() - t0
        if output is None:
            result.failures += 1
            return None
        times, forecasts = output
        keep = times >= start
        result.add_run(forecasts[keep], dataset.states[times[keep]], dataset.times[times[keep]],
                       inference_time=elapsed / max(times.size, 1), train_time=forecaster.train_time)
        return forecasts[keep]

    def run_forecast_bench(self, dataset, methods=None, series=None):
        """Fit forecasters on the first `train_size` states and score one-step forecasts on the rest

        `series` replaces the ground-truth states as the training/input stream
        (e.g. estimated voltages); scoring is always against ground truth.
        """
        runs = int(self.config.get("runs", 1))
        base_seed = int(self.config.get("seed", 0))
        window = int(self.config.get("window", 10))
        split = int(self.config.get("train_size", len(dataset) // 2))
        inputs = dataset.states if series is None else np.asarray(series, dtype=float)
        make_window_dataset(inputs, window, split)
        results = {}
        self.running = True
        self.logger.info(f"Forecast bench: split at {split} of {len(dataset)} states, window {window}, {runs} run(s)")

        for run in range(runs):
            config = dict(self.config, seed=base_seed + run)
            for method in methods or FORECAST_METHODS:
                result = results.setdefault(method, MethodResult(name=method))
                if run > 0 and method == "var1":
                    continue
                forecaster = build_forecaster(method, artifacts=self.artifacts, config=config)
                self.safe_execute(forecaster, "initialize")
                if self.safe_execute(forecaster, "fit", inputs[:split]) is None:
                    result.failures += 1
                    continue
                if self.score_forecaster(forecaster, inputs, dataset, split + window, result) is not None:
                    self.logger.info(f"Run {run + 1}/{runs} {method}: forecast RMSE {result.rmses[-1]:.4e}")

        self.running = False
        return results

    def run_monitor(self, estimator, forecaster, dataset, trials=1, missing_rate=None):
        """Closed-loop monitoring over `trials` masking seeds"""
        missing_rate = self.config.get("missing_rate", 0.1) if missing_rate is None else missing_rate
        monitor = StateMonitor(estimator, forecaster, missing_rate=missing_rate,
                               seed=int(self.config.get("seed", 0)), artifacts=self.artifacts)
        monitor.initialize()
        outcomes = []
        for trial in range(trials):
            outcome = self.safe_execute(monitor, "run", dataset, seed=monitor.seed + trial)
            if outcome is not None:
                outcomes.append(outcome)
        return outcomes

    def get_status(self):
        return {
            "running": self.running,
            "failures": dict(self.failure_counts),
            "errors": {k: dict(v) for k, v in self.error_history.items()},
        }
