"""One-step forecasters: deep RNN, VAR(1) and the flattened-window FNN"""
import json
import os
import time

import numpy as np

from estimators.base_estimator import BaseForecaster
from forecaster.rnn import RnnParams, rnn_forward
from forecaster.training import RnnArch, train_fnn_forecaster, train_rnn
from forecaster.var1 import VarParams, var1_fit, var1_predict
from forecaster.windows import make_window_dataset, series_array
from grid.model import StateVector
from neuralnet.checkpoint import CHECKPOINT_SCHEMA, load_checkpoint, save_checkpoint
from neuralnet.dispatch import predict
from neuralnet.fnn import FnnParams
from neuralnet.training import TrainConfig
from utils.errors import CorruptFile, IoError


class _TrainedForecaster(BaseForecaster):

    def __init__(self, window, params=None, train_cfg=None, artifacts=None, config=None):
        super().__init__(window, artifacts, config)
        overrides = {"loss": self.config.get("forecast_loss", "mse")}
        self.train_cfg = train_cfg or TrainConfig.from_config(self.config, **overrides)
        self.model = params
        self.history = []

    def _train(self, windows):
        raise NotImplementedError

    def fit(self, states):
        train, _ = make_window_dataset(series_array(states), self.window)
        self.status = "training"
        start = time.perf_counter()
        self.model, self.history = self._train(train)
        self.train_time = time.perf_counter() - start
        self.status = "ready"
        self.log_action("fit", {"windows": len(train), "train_time_s": self.train_time})
        return self

    def save(self, path):
        return save_checkpoint(path, self.model, self.train_cfg, seed=self.train_cfg.seed, history=self.history)


class RnnForecaster(_TrainedForecaster):
    """Stacked RNN read out at the last step of each window"""

    method = "rnn"

    def __init__(self, window=None, layers=None, widths=None, activation=None, params=None, train_cfg=None,
                 artifacts=None, config=None):
        config = config or {}
        window = params.window if params is not None else int(window or config.get("window", 10))
        super().__init__(window, params, train_cfg, artifacts, config)
        self.arch = RnnArch(layers=int(layers or self.config.get("rnn_layers", 3)), widths=widths,
                            window=self.window, activation=activation or self.config.get("rnn_activation", "relu"))

    def _train(self, windows):
        return train_rnn(windows, self.train_cfg, self.arch)

    def forecast(self, history):
        return rnn_forward(self.model, self._history(history))


class FnnForecaster(_TrainedForecaster):
    """Single hidden layer over the flattened window"""

    method = "fnn2"

    def __init__(self, window=None, width=None, activation=None, params=None, train_cfg=None, artifacts=None,
                 config=None):
        config = config or {}
        if params is not None:
            window = params.input_dim // params.output_dim
        super().__init__(int(window or config.get("window", 10)), params, train_cfg, artifacts, config)
        self.width = width
        self.activation = activation or self.config.get("activation", "relu")

    def _train(self, windows):
        return train_fnn_forecaster(windows, self.train_cfg, hidden_layers=1, width=self.width,
                                    activation=self.activation)

    def forecast(self, history):
        flat = self._history(history).reshape(1, -1)
        return StateVector(predict(self.model, flat)[0])


class Var1Forecaster(BaseForecaster):
    """Least-squares VAR(1) baseline"""

    method = "var1"

    def __init__(self, params=None, artifacts=None, config=None):
        super().__init__(1, artifacts, config)
        self.model = params

    def fit(self, states):
        start = time.perf_counter()
        self.model = var1_fit(series_array(states))
        self.train_time = time.perf_counter() - start
        self.status = "ready"
        self.log_action("fit", {"samples": int(np.shape(states)[0])})
        return self

    def forecast(self, history):
        return StateVector(var1_predict(self.model, self._history(history)[-1]))

    def save(self, path):
        data = {"schema": CHECKPOINT_SCHEMA, "family": VarParams.family, "params": self.model.to_dict()}
        try:
            os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
            with open(path, "w") as f:
                json.dump(data, f)
        except OSError as e:
            raise IoError(f"cannot write VAR(1) model {path}: {e}", path=str(path))
        self.logger.info(f"Saved VAR(1) model to {path}")
        return path


def build_forecaster(method, artifacts=None, config=None):
    if method == "rnn":
        return RnnForecaster(artifacts=artifacts, config=config)
    if method == "var1":
        return Var1Forecaster(artifacts=artifacts, config=config)
    if method == "fnn2":
        return FnnForecaster(artifacts=artifacts, config=config)
    raise ValueError(f"unknown forecaster '{method}'; choose from rnn, var1, fnn2")


def load_forecaster(path, artifacts=None, config=None):
    """Rebuild a saved forecaster from its checkpoint family"""
    try:
        with open(path) as f:
            data = json.load(f)
    except OSError as e:
        raise IoError(f"cannot read forecaster {path}: {e}", path=str(path))
    except json.JSONDecodeError as e:
        raise CorruptFile(f"forecaster {path} is not valid JSON: {e}", path=str(path))

    if data.get("family") == VarParams.family:
        try:
            return Var1Forecaster(params=VarParams.from_dict(data["params"]), artifacts=artifacts, config=config)
        except (KeyError, TypeError) as e:
            raise CorruptFile(f"VAR(1) model {path} is incomplete: {e}", path=str(path))

    params, meta = load_checkpoint(path)
    train_cfg = TrainConfig(**meta["train_config"]) if meta.get("train_config") else None
    if isinstance(params, RnnParams):
        forecaster = RnnForecaster(params=params, train_cfg=train_cfg, artifacts=artifacts, config=config)
    elif isinstance(params, FnnParams):
        forecaster = FnnForecaster(params=params, train_cfg=train_cfg, artifacts=artifacts, config=config)
    else:
        raise CorruptFile(f"{path} holds a {params.family} network, not a forecaster", path=str(path))
    forecaster.history = meta.get("history") or []
    return forecaster
