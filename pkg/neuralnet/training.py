"""Minibatch Adam training shared by every network family"""
import logging
from dataclasses import dataclass

import numpy as np

from neuralnet.dispatch import loss_and_grad
from neuralnet.losses import LOSSES
from neuralnet.optim import AdamState, adam_step
from utils.errors import DimensionMismatch, NonFiniteLoss

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    epochs: int = 200
    batch_size: int = 64
    learning_rate: float = 1e-3
    loss: str = "huber"
    huber_delta: float = 1.0
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.loss not in LOSSES:
            raise ValueError(f"unknown loss '{self.loss}'; choose from {LOSSES}")
        if self.huber_delta <= 0:
            raise ValueError("huber_delta must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1) or self.adam_eps <= 0:
            raise ValueError("invalid Adam hyper-parameters")

    @classmethod
    def from_config(cls, config, **overrides):
        kwargs = dict(
            epochs=int(config.get("epochs", 200)),
            batch_size=int(config.get("batch_size", 64)),
            learning_rate=float(config.get("learning_rate", 1e-3)),
            loss=config.get("loss", "huber"),
            huber_delta=float(config.get("huber_delta", 1.0)),
            seed=int(config.get("seed", 0)),
            beta1=float(config.get("beta1", 0.9)),
            beta2=float(config.get("beta2", 0.999)),
            adam_eps=float(config.get("adam_eps", 1e-8)),
        )
        kwargs.update(overrides)
        return cls(**kwargs)

    def to_dict(self):
        return dict(self.__dict__)


def training_arrays(dataset):
    """(inputs, targets) from a tuple or an object exposing training_arrays()"""
    if isinstance(dataset, tuple):
        inputs, targets = dataset
    else:
        inputs, targets = dataset.training_arrays()
    inputs = np.asarray(inputs, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if inputs.shape[0] != targets.shape[0] or inputs.shape[0] == 0:
        raise DimensionMismatch(f"need matching non-empty inputs/targets, got {inputs.shape} and {targets.shape}",
                                inputs=list(inputs.shape), targets=list(targets.shape))
    return inputs, targets


def _log_epoch(epoch, epochs, loss):
    message = f"Epoch {epoch + 1}/{epochs}: training loss {loss:.6e}"
    if epoch == 0 or epoch + 1 == epochs or (epoch + 1) % 10 == 0:
        logger.info(message)
    else:
        logger.debug(message)


def train_estimator(params, dataset, cfg=None):
    """Train any registered family; returns (params, per-epoch mean training loss)"""
    cfg = cfg or TrainConfig()
    inputs, targets = training_arrays(dataset)
    n = inputs.shape[0]
    rng = np.random.default_rng(cfg.seed)
    state = AdamState.for_params(params)
    history = []

    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for batch_no, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            loss, grads = loss_and_grad(params, inputs[idx], targets[idx], cfg.loss, cfg.huber_delta)
            if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads.values()):
                raise NonFiniteLoss(f"non-finite loss or gradient at epoch {epoch + 1}, batch {batch_no}",
                                    epoch=epoch + 1, batch=batch_no, loss=float(loss),
                                    learning_rate=cfg.learning_rate)
            params, state = adam_step(params, grads, state, cfg)
            total += loss * idx.size
        history.append(total / n)
        _log_epoch(epoch, cfg.epochs, history[-1])

    return params, history
