"""Run reports: deterministic metrics JSON, timings JSON and plot-ready CSVs"""
import logging
import os
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np
import pandas as pd

from core.experiment_manager import MethodResult, resource_snapshot
from pipeline.metrics import polar_errors

logger = logging.getLogger(__name__)

REPORT_SCHEMA = "report/1"


@dataclass
class RunReport:
    task: str
    methods: Dict[str, MethodResult] = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    seeds: List[int] = field(default_factory=list)
    artifacts: Dict[str, str] = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        """Everything except wall-clock figures, so seeded reruns compare equal"""
        return {
            "schema": REPORT_SCHEMA,
            "task": self.task,
            "methods": {name: result.metrics() for name, result in sorted(self.methods.items())},
            "config": {k: self.config[k] for k in sorted(self.config)},
            "seeds": list(self.seeds),
            "artifacts": dict(sorted(self.artifacts.items())),
            "extra": self.extra,
        }

    def timings_dict(self):
        return {
            "task": self.task,
            "methods": {name: result.timings() for name, result in sorted(self.methods.items())},
            "resources": resource_snapshot(),
        }


def rmse_trace_frame(report):
    rows = []
    for name, result in sorted(report.methods.items()):
        if result.per_sample_rmse is None:
            continue
        for j, (t, value) in enumerate(zip(result.times, result.per_sample_rmse)):
            rows.append({"method": name, "instance": j, "t": t, "rmse": float(value)})
    return pd.DataFrame(rows, columns=["method", "instance", "t", "rmse"])


def _clamp_instance(result, instance):
    last = result.estimates.shape[0] - 1
    if instance > last:
        logger.warning(f"Report instance {instance} beyond {result.name}'s {last + 1} samples; using {last}")
        return last
    return instance


def bus_error_frame(report, instance=0):
    """One row per bus: magnitude and wrapped angle errors of every method at one instance"""
    columns = {}
    for name, result in sorted(report.methods.items()):
        if result.estimates is None:
            continue
        j = _clamp_instance(result, instance)
        magnitude, angle = polar_errors(result.estimates[j], result.truth[j])
        columns[f"{name}_magnitude_error"] = magnitude
        columns[f"{name}_angle_error"] = angle
    if not columns:
        return pd.DataFrame(columns=["bus"])
    n_buses = len(next(iter(columns.values())))
    return pd.DataFrame({"bus": np.arange(1, n_buses + 1), **columns})


def bus_trace_frame(report, bus=1, start=0, window=50):
    """Estimated and true magnitude/angle of one bus over an instance window"""
    rows = []
    k = bus - 1
    for name, result in sorted(report.methods.items()):
        if result.estimates is None:
            continue
        if not 0 <= k < result.estimates.shape[1] // 2:
            raise ValueError(f"report bus {bus} outside 1..{result.estimates.shape[1] // 2}")
        stop = min(start + window, result.estimates.shape[0])
        for j in range(start, stop):
            est = complex(result.estimates[j, 2 * k], result.estimates[j, 2 * k + 1])
            true = complex(result.truth[j, 2 * k], result.truth[j, 2 * k + 1])
            rows.append({"method": name, "instance": j, "t": result.times[j], "magnitude": abs(est),
                         "angle": float(np.angle(est)), "true_magnitude": abs(true),
                         "true_angle": float(np.angle(true))})
    return pd.DataFrame(rows, columns=["method", "instance", "t", "magnitude", "angle", "true_magnitude",
                                       "true_angle"])


def emit_report(report, artifacts, bus=1, instance=0, trace_window=50, plots=False):
    """Write report.json, timings.json and the plot-ready CSVs under reports/"""
    frames = {
        "rmse_traces": rmse_trace_frame(report),
        "bus_errors": bus_error_frame(report, instance),
        "bus_trace": bus_trace_frame(report, bus, instance, trace_window),
    }
    for name, frame in frames.items():
        path = artifacts.save_csv(os.path.join("reports", f"{name}.csv"), frame)
        report.artifacts[name] = os.path.relpath(path, artifacts.out_dir)

    if plots:
        from cli.plots import render_report_figures
        for name, path in render_report_figures(artifacts, frames).items():
            report.artifacts[f"figure_{name}"] = os.path.relpath(path, artifacts.out_dir)

    artifacts.save_json(os.path.join("reports", "timings.json"), report.timings_dict())
    path = artifacts.save_json(os.path.join("reports", "report.json"), report.to_dict())
    logger.info(f"Report for {report.task} written to {path}")
    return path
