"""Training entry points for the learned forecasters"""
import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from forecaster.rnn import RnnParams, init_rnn
from forecaster.var1 import VarParams, var1_predict
from forecaster.windows import series_array
from neuralnet.dispatch import predict
from neuralnet.fnn import FnnParams, init_fnn
from neuralnet.training import TrainConfig, train_estimator
from utils.errors import DimensionMismatch, SeriesTooShort

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RnnArch:
    layers: int = 3
    widths: Optional[List[int]] = None
    window: int = 10
    activation: str = "relu"


def train_rnn(dataset, cfg=None, arch=None, params=None):
    """Fit a stacked RNN on windowed states (ground truth or estimates)"""
    cfg = cfg or TrainConfig(loss="mse")
    arch = arch or RnnArch(window=dataset.window)
    if arch.window != dataset.window:
        raise DimensionMismatch(f"architecture window {arch.window} != dataset window {dataset.window}",
                                expected=arch.window, found=dataset.window)
    dim = dataset.targets.shape[1]
    if params is None:
        params = init_rnn(dim, arch.window, n_layers=arch.layers, widths=arch.widths,
                          activation=arch.activation, seed=cfg.seed)
    logger.info(f"Training RNN forecaster: {params.n_layers} layers, window {params.window}, "
                f"{len(dataset)} windows, {params.param_count} parameters")
    return train_estimator(params, dataset.training_arrays(), cfg)


def train_fnn_forecaster(dataset, cfg=None, hidden_layers=1, width=None, activation="relu"):
    """Single-hidden-layer FNN on flattened windows (input width r * 2N)"""
    cfg = cfg or TrainConfig(loss="mse")
    inputs, targets = dataset.flattened()
    params = init_fnn(inputs.shape[1], targets.shape[1], hidden_layers, width=width or targets.shape[1],
                      activation=activation, seed=cfg.seed)
    logger.info(f"Training FNN forecaster: {hidden_layers} hidden layer(s), {len(dataset)} windows")
    return train_estimator(params, (inputs, targets), cfg)


def forecast_stream(model, series, window=None):
    """Causal one-step forecasts for t = r..T-1 from states strictly before t

    Returns (times, forecasts) where forecasts[j] predicts series[times[j]].
    """
    states = series_array(series)
    if isinstance(model, VarParams):
        window = 1
    elif isinstance(model, RnnParams):
        window = model.window
    elif window is None:
        raise ValueError("window is required for feed-forward forecasters")
    if states.shape[0] <= window:
        raise SeriesTooShort(f"series of length {states.shape[0]} holds no forecast for window {window}",
                             length=states.shape[0], window=window)
    times = np.arange(window, states.shape[0])
    if isinstance(model, VarParams):
        return times, var1_predict(model, states[times - 1])
    idx = times[:, None] - window + np.arange(window)[None, :]
    windows = states[idx]
    if isinstance(model, FnnParams):
        windows = windows.reshape(windows.shape[0], -1)
    return times, predict(model, windows)
