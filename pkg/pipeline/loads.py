"""Load series: CSV ingestion, synthetic profiles and scaling to a case"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from utils.errors import ColumnMapInvalid, DegenerateSeries, IoError, ParseError

logger = logging.getLogger(__name__)

PROFILES = ("sinusoid", "random-walk")

# Load-trace stride per case size when none is configured
SUBSAMPLE_BY_SIZE = {57: 5, 118: 2}


@dataclass(frozen=True)
class LoadSeries:
    """Per-bus demand over time

    `kind` is "multiplier" (dimensionless shape around 1.0), "raw" (values
    in the source's own units) or "absolute" (per-unit demand for a case).
    """
    times: np.ndarray
    buses: Tuple[int, ...]
    pd: np.ndarray
    qd: Optional[np.ndarray] = None
    kind: str = "multiplier"
    source: str = "synthetic"

    def __post_init__(self):
        times = np.asarray(self.times)
        pd_ = np.asarray(self.pd, dtype=float)
        if pd_.ndim != 2 or pd_.shape != (times.size, len(self.buses)):
            raise ValueError(f"pd must have shape ({times.size}, {len(self.buses)}), got {pd_.shape}")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise ValueError("load series times must be strictly increasing")
        if self.kind != "absolute" and np.any(pd_ < 0):
            raise ValueError("active demands must be non-negative")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "buses", tuple(int(b) for b in self.buses))
        object.__setattr__(self, "pd", pd_)
        if self.qd is not None:
            object.__setattr__(self, "qd", np.asarray(self.qd, dtype=float))

    def __len__(self):
        return self.times.size

    def subsample(self, factor):
        if factor < 1:
            raise ValueError("subsample factor must be >= 1")
        return LoadSeries(times=self.times[::factor], buses=self.buses, pd=self.pd[::factor],
                          qd=None if self.qd is None else self.qd[::factor], kind=self.kind, source=self.source)

    def head(self, length):
        return LoadSeries(times=self.times[:length], buses=self.buses, pd=self.pd[:length],
                          qd=None if self.qd is None else self.qd[:length], kind=self.kind, source=self.source)


def default_subsample(grid):
    return SUBSAMPLE_BY_SIZE.get(grid.n_buses, 1)


def ingest_load_csv(path, column_map, time_column="t", subsample=None, reactive_map=None, grid=None):
    """Read demand columns into a raw series; column_map maps bus id -> column name

    Without an explicit `subsample` the stride follows the size of `grid`,
    or 1 when no grid is given.
    """
    if subsample is None:
        subsample = default_subsample(grid) if grid is not None else 1
    subsample = int(subsample)
    if subsample < 1:
        raise ValueError("subsample factor must be >= 1")
    if not column_map:
        raise ColumnMapInvalid("column map is empty")
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except OSError as e:
        raise IoError(f"cannot read load CSV {path}: {e}", path=str(path))
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ParseError(f"cannot parse load CSV {path}: {e}", path=str(path))

    buses = sorted(int(b) for b in column_map)
    wanted = [time_column] + [column_map[b] for b in buses]
    if reactive_map:
        if sorted(int(b) for b in reactive_map) != buses:
            raise ColumnMapInvalid("reactive column map must cover the same buses as the active map")
        wanted += [reactive_map[b] for b in buses]
    missing = [c for c in wanted if c not in frame.columns]
    if missing:
        raise ColumnMapInvalid(f"columns not found in {path}: {missing}", missing=missing,
                               available=list(frame.columns))

    try:
        times = pd.to_numeric(frame[time_column]).to_numpy()
        pd_values = frame[[column_map[b] for b in buses]].apply(pd.to_numeric).to_numpy(dtype=float)
        qd_values = None
        if reactive_map:
            qd_values = frame[[reactive_map[b] for b in buses]].apply(pd.to_numeric).to_numpy(dtype=float)
    except (ValueError, TypeError) as e:
        raise ParseError(f"non-numeric load data in {path}: {e}", path=str(path))
    if not np.all(np.isfinite(pd_values)):
        raise ParseError(f"load CSV {path} has empty or non-finite demand entries", path=str(path))

    try:
        series = LoadSeries(times=times, buses=buses, pd=pd_values, qd=qd_values, kind="raw", source="csv")
    except ValueError as e:
        raise ParseError(f"invalid load series in {path}: {e}", path=str(path))
    if subsample > 1:
        series = series.subsample(subsample)
    logger.info(f"Ingested {len(series)} load samples for {len(buses)} buses from {path}")
    return series


def write_load_csv(series, path, time_column="t"):
    """Write a series so that ingest_load_csv reads it back identically"""
    columns = {time_column: series.times}
    for j, bus in enumerate(series.buses):
        columns[f"p_{bus}"] = series.pd[:, j]
    if series.qd is not None:
        for j, bus in enumerate(series.buses):
            columns[f"q_{bus}"] = series.qd[:, j]
    try:
        pd.DataFrame(columns).to_csv(path, index=False, float_format="%.17g")
    except OSError as e:
        raise IoError(f"cannot write load CSV {path}: {e}", path=str(path))
    column_map = {bus: f"p_{bus}" for bus in series.buses}
    reactive_map = {bus: f"q_{bus}" for bus in series.buses} if series.qd is not None else None
    return column_map, reactive_map


def synth_load_series(grid, length, seed=0, profile="sinusoid", amplitude=0.15, period=24, noise=0.1):
    """Per-bus multipliers around 1.0

    sinusoid: 1 + amplitude (sin(2 pi t / period + phase_n) + noise e_t)
    random-walk: 1 + amplitude * cumsum(e) / sqrt(length)
    """
    if length < 2:
        raise ValueError("load series length must be >= 2")
    if profile not in PROFILES:
        raise ValueError(f"unknown load profile '{profile}'; choose from {PROFILES}")
    rng = np.random.default_rng(seed)
    n = grid.n_buses
    t = np.arange(length)
    if profile == "sinusoid":
        phase = rng.uniform(-np.pi / 6, np.pi / 6, size=n)
        shape = np.sin(2 * np.pi * t[:, None] / period + phase[None, :])
        shape = shape + noise * rng.standard_normal((length, n))
    else:
        shape = np.cumsum(rng.standard_normal((length, n)), axis=0) / np.sqrt(length)
    multipliers = np.maximum(1.0 + amplitude * shape, 0.0)
    return LoadSeries(times=t, buses=tuple(range(1, n + 1)), pd=multipliers, kind="multiplier", source="synthetic")


def scale_loads(series, grid):
    """Absolute per-unit demand whose per-bus mean equals the case's nominal Pd

    Buses without a series stay at nominal; Qd follows the nominal Q/P ratio
    unless the series carries its own reactive column.
    """
    if series.kind == "absolute":
        return series
    pd_nom, qd_nom = grid.demand()
    length = len(series)
    pd_out = np.tile(pd_nom, (length, 1))
    qd_out = np.tile(qd_nom, (length, 1))

    for j, bus in enumerate(series.buses):
        if not 1 <= bus <= grid.n_buses:
            raise ColumnMapInvalid(f"load series bus {bus} is not in the grid", bus=bus)
        k = bus - 1
        column = series.pd[:, j]
        mean = column.mean()
        if not np.isfinite(mean) or mean <= 0:
            raise DegenerateSeries(f"load series for bus {bus} has non-positive mean {mean}", bus=bus)
        if np.ptp(column) > 0:
            pd_out[:, k] = pd_nom[k] * column / mean
        if series.qd is not None:
            q_column = series.qd[:, j]
            q_mean = q_column.mean()
            qd_out[:, k] = qd_nom[k] * q_column / q_mean if q_mean != 0 else qd_nom[k]
        elif pd_nom[k] != 0:
            qd_out[:, k] = pd_out[:, k] * (qd_nom[k] / pd_nom[k])

    return LoadSeries(times=series.times, buses=tuple(range(1, grid.n_buses + 1)), pd=pd_out, qd=qd_out,
                      kind="absolute", source=series.source)
