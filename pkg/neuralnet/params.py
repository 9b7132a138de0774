"""Parameter containers shared by every network family

A parameter set is a flat, ordered mapping of named float64 tensors plus a
JSON-able architecture descriptor. Updates never mutate in place; they
produce a new set through `with_tensors`.
"""
import copy
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from utils.errors import DimensionMismatch

_FAMILIES = {}


def register_family(cls):
    """Make a ParamSet subclass loadable from checkpoints by its family name"""
    _FAMILIES[cls.family] = cls
    return cls


def family_class(name):
    try:
        return _FAMILIES[name]
    except KeyError:
        raise KeyError(f"unknown network family '{name}'; known: {sorted(_FAMILIES)}")


@dataclass
class ParamSet:
    tensors: Dict[str, np.ndarray]
    arch: dict = field(default_factory=dict)

    family = "base"

    def __post_init__(self):
        self.tensors = {name: np.asarray(t, dtype=float) for name, t in self.tensors.items()}

    @property
    def names(self):
        return list(self.tensors)

    @property
    def param_count(self):
        return int(sum(t.size for t in self.tensors.values()))

    def with_tensors(self, tensors):
        missing = set(self.tensors) ^ set(tensors)
        if missing:
            raise DimensionMismatch(f"tensor names differ: {sorted(missing)}")
        for name, t in tensors.items():
            if np.shape(t) != self.tensors[name].shape:
                raise DimensionMismatch(f"tensor {name} has shape {np.shape(t)}, expected {self.tensors[name].shape}")
        return type(self)(tensors={name: tensors[name] for name in self.tensors}, arch=copy.deepcopy(self.arch))

    def copy(self):
        return self.with_tensors({name: t.copy() for name, t in self.tensors.items()})

    def zeros_like(self):
        return {name: np.zeros_like(t) for name, t in self.tensors.items()}

    def all_finite(self):
        return all(np.all(np.isfinite(t)) for t in self.tensors.values())


def fan_in_uniform(rng, shape):
    """U(-1/sqrt(fan_in), 1/sqrt(fan_in)) with fan_in = number of columns"""
    fan_in = shape[-1] if len(shape) > 1 else shape[0]
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def perturb_tensors(params, scale, seed):
    """Add zero-mean Gaussian noise of the given scale to every tensor"""
    if scale <= 0:
        return params
    rng = np.random.default_rng(seed)
    return params.with_tensors({name: t + scale * rng.standard_normal(t.shape)
                                for name, t in params.tensors.items()})
