"""Learned estimators: the unrolled prox-linear net and plain FNNs"""
import time

from estimators.base_estimator import BaseEstimator, measurement_values
from neuralnet.checkpoint import load_checkpoint, save_checkpoint
from neuralnet.dispatch import predict
from neuralnet.fnn import FnnParams, fnn_forward, init_fnn
from neuralnet.proxlinear_net import ProxLinearNetParams, init_proxlinear, init_proxlinear_random, proxlinear_forward
from neuralnet.training import TrainConfig, train_estimator
from solvers.prox_linear import ProxLinearConfig
from utils.errors import CorruptFile, DimensionMismatch

NET_INITS = ("random", "solver")


class _NetworkEstimator(BaseEstimator):
    """Shared training, batching and checkpoint plumbing"""

    params_class = None

    def __init__(self, forms, params=None, train_cfg=None, artifacts=None, config=None):
        super().__init__(forms, artifacts, config)
        self.train_cfg = train_cfg or TrainConfig.from_config(self.config)
        self.params = params
        self.history = []
        if params is not None:
            self._check_params(params)

    def _check_params(self, params):
        if not isinstance(params, self.params_class):
            raise TypeError(f"{self.name} expects {self.params_class.__name__}, got {type(params).__name__}")
        if params.input_dim != self.forms.n_measurements or params.output_dim != self.forms.n_state:
            raise DimensionMismatch(
                f"network maps {params.input_dim} -> {params.output_dim}, measurement model needs "
                f"{self.forms.n_measurements} -> {self.forms.n_state}",
                expected=[self.forms.n_measurements, self.forms.n_state],
                found=[params.input_dim, params.output_dim])

    def build(self):
        raise NotImplementedError

    def initialize(self):
        if self.params is None:
            self.params = self.build()
        self.logger.info(f"Initializing {self.name} ({self.params.param_count} parameters)")
        self.status = "ready"
        return True

    def fit(self, dataset):
        if self.params is None:
            self.initialize()
        self.status = "training"
        start = time.perf_counter()
        self.params, self.history = train_estimator(self.params, dataset, self.train_cfg)
        self.train_time = time.perf_counter() - start
        self.status = "ready"
        final_loss = self.history[-1] if self.history else None
        self.log_action("fit", {"epochs": self.train_cfg.epochs, "final_loss": final_loss,
                                "train_time_s": self.train_time})
        return self

    def _estimate_many(self, values, samples):
        return predict(self.params, values)

    def save(self, path):
        return save_checkpoint(path, self.params, self.train_cfg, seed=self.train_cfg.seed, history=self.history)


class ProxNetEstimator(_NetworkEstimator):
    """Unrolled prox-linear network; `init` picks random or solver-derived weights"""

    method = "proxnet"
    params_class = ProxLinearNetParams

    def __init__(self, forms, params=None, blocks=None, layers=None, activation=None, init=None, perturb=None,
                 train_cfg=None, artifacts=None, config=None):
        super().__init__(forms, params, train_cfg, artifacts, config)
        self.blocks = int(blocks or self.config.get("net_blocks", 2))
        self.layers = int(layers or self.config.get("net_layers", 3))
        self.activation = activation or self.config.get("activation", "relu")
        self.init = init or self.config.get("net_init", "random")
        self.perturb = float(perturb if perturb is not None else self.config.get("perturb", 0.0))
        if self.init not in NET_INITS:
            raise ValueError(f"net init must be one of {NET_INITS}, got '{self.init}'")

    def build(self):
        if self.init == "solver":
            cfg = ProxLinearConfig.from_config(self.config, outer_iters=self.blocks - 1, inner_iters=self.layers)
            return init_proxlinear(self.forms, cfg, perturb=self.perturb, seed=self.train_cfg.seed,
                                   activation=self.activation)
        return init_proxlinear_random(self.forms.n_measurements, self.forms.n_state, n_blocks=self.blocks,
                                      n_layers=self.layers, activation=self.activation, seed=self.train_cfg.seed)

    def estimate(self, z):
        return proxlinear_forward(self.params, measurement_values(z))


class FnnEstimator(_NetworkEstimator):
    """Plain feed-forward baseline with hidden widths equal to the input dimension"""

    params_class = FnnParams

    def __init__(self, forms, hidden_layers=6, width=None, activation=None, params=None, train_cfg=None,
                 artifacts=None, config=None):
        super().__init__(forms, params, train_cfg, artifacts, config)
        self.hidden_layers = int(params.arch["hidden"] if params is not None else hidden_layers)
        self.width = width
        self.activation = activation or self.config.get("activation", "relu")

    @property
    def method(self):
        return f"fnn-{self.hidden_layers}"

    def build(self):
        return init_fnn(self.forms.n_measurements, self.forms.n_state, self.hidden_layers,
                        width=self.width or self.forms.n_measurements, activation=self.activation,
                        seed=self.train_cfg.seed)

    def estimate(self, z):
        return fnn_forward(self.params, measurement_values(z))


def load_estimator(forms, path, artifacts=None, config=None):
    """Estimator for a saved prox-linear net or FNN checkpoint"""
    params, meta = load_checkpoint(path)
    train_cfg = TrainConfig(**meta["train_config"]) if meta.get("train_config") else None
    if isinstance(params, ProxLinearNetParams):
        estimator = ProxNetEstimator(forms, params=params, train_cfg=train_cfg, artifacts=artifacts, config=config)
    elif isinstance(params, FnnParams):
        estimator = FnnEstimator(forms, params=params, train_cfg=train_cfg, artifacts=artifacts, config=config)
    else:
        raise CorruptFile(f"{path} holds a {params.family} network, not a state estimator", path=str(path))
    estimator.history = meta.get("history") or []
    return estimator
