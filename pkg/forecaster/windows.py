"""Sliding windows over a state series"""
import logging
from dataclasses import dataclass

import numpy as np

from grid.model import state_array
from utils.errors import SeriesTooShort

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WindowedSeries:
    """inputs[j] = states[t-r+1..t], targets[j] = states[t+1], target_times[j] = t+1"""
    inputs: np.ndarray
    targets: np.ndarray
    target_times: np.ndarray

    def __len__(self):
        return self.targets.shape[0]

    @property
    def window(self):
        return self.inputs.shape[1]

    def training_arrays(self):
        return self.inputs, self.targets

    def flattened(self):
        """(S, r*2N) inputs for feed-forward models"""
        return self.inputs.reshape(self.inputs.shape[0], -1), self.targets


def series_array(series):
    if isinstance(series, np.ndarray) and series.ndim == 2:
        return np.asarray(series, dtype=float)
    return np.asarray([state_array(v) for v in series], dtype=float)


def _windows(states, window, start, stop):
    """All windows whose inputs and target lie in [start, stop)"""
    times = np.arange(start + window, stop)
    if times.size == 0:
        return WindowedSeries(inputs=np.empty((0, window, states.shape[1])),
                              targets=np.empty((0, states.shape[1])), target_times=times)
    idx = times[:, None] - window + np.arange(window)[None, :]
    return WindowedSeries(inputs=states[idx], targets=states[times], target_times=times)


def make_window_dataset(series, window, split=None):
    """(train, test) windows; no window straddles the split index

    Train windows lie in [0, split) and test windows in [split, T); without a
    split every window goes to train.
    """
    states = series_array(series)
    length = states.shape[0]
    if window < 1:
        raise ValueError("window must be >= 1")
    if length <= window + 1:
        raise SeriesTooShort(f"series of length {length} is too short for window {window}",
                             length=length, window=window)
    split = length if split is None else int(split)
    if not 0 <= split <= length:
        raise ValueError(f"split index {split} outside 0..{length}")
    train = _windows(states, window, 0, split)
    test = _windows(states, window, split, length)
    if len(train) == 0:
        raise SeriesTooShort(f"training span of {split} samples holds no window of length {window}",
                             length=split, window=window)
    logger.debug(f"Windowed series: {len(train)} train / {len(test)} test windows (r={window})")
    return train, test


def window_counts(length, window, split):
    """Closed-form (train, test) window counts"""
    return max(split - window, 0), max(length - split - window, 0)
