"""Adam with bias correction, applied functionally"""
from dataclasses import dataclass, field
from typing import Dict

import numpy as np


@dataclass
class AdamState:
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    @classmethod
    def for_params(cls, params):
        return cls(m=params.zeros_like(), v=params.zeros_like(), step=0)

    def copy(self):
        return AdamState(m={k: a.copy() for k, a in self.m.items()},
                         v={k: a.copy() for k, a in self.v.items()}, step=self.step)


def adam_step(params, grads, state, cfg):
    """Return (new params, new state); inputs are left untouched"""
    lr, beta1, beta2, eps = cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps
    step = state.step + 1
    correction1 = 1.0 - beta1 ** step
    correction2 = 1.0 - beta2 ** step
    new_m, new_v, new_tensors = {}, {}, {}
    for name, p in params.tensors.items():
        g = grads[name]
        m = beta1 * state.m[name] + (1.0 - beta1) * g
        v = beta2 * state.v[name] + (1.0 - beta2) * g * g
        new_m[name], new_v[name] = m, v
        new_tensors[name] = p - lr * (m / correction1) / (np.sqrt(v / correction2) + eps)
    return params.with_tensors(new_tensors), AdamState(m=new_m, v=new_v, step=step)
