"""First-order vector autoregression baseline"""
import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lstsq, solve

from forecaster.windows import series_array
from utils.errors import IllConditioned, SeriesTooShort

logger = logging.getLogger(__name__)

RIDGE = 1e-8
COND_LIMIT = 1e12


@dataclass(frozen=True)
class VarParams:
    transition: np.ndarray
    intercept: np.ndarray

    family = "var1"

    def to_dict(self):
        return {"transition": self.transition.tolist(), "intercept": self.intercept.tolist()}

    @classmethod
    def from_dict(cls, data):
        return cls(transition=np.asarray(data["transition"], dtype=float),
                   intercept=np.asarray(data["intercept"], dtype=float))


def var1_fit(series):
    """Least-squares v_{t+1} ~ A v_t + c; ridge fallback when ill-conditioned"""
    states = series_array(series)
    if states.shape[0] < 2:
        raise SeriesTooShort("VAR(1) needs at least two samples", length=states.shape[0])
    dim = states.shape[1]
    x = np.hstack([states[:-1], np.ones((states.shape[0] - 1, 1))])
    y = states[1:]
    gram = x.T @ x
    cond = np.linalg.cond(gram)
    if x.shape[0] < dim + 1 or not np.isfinite(cond) or cond > COND_LIMIT:
        warnings.warn(f"VAR(1) normal matrix ill-conditioned (cond={cond:.3e}, {x.shape[0]} pairs); "
                      f"using ridge {RIDGE:g}", IllConditioned)
        logger.warning(f"VAR(1) fit falling back to ridge {RIDGE:g} (cond={cond:.3e})")
        coef = solve(gram + RIDGE * np.eye(dim + 1), x.T @ y, assume_a="pos")
    else:
        coef = lstsq(x, y)[0]
    return VarParams(transition=coef[:dim].T.copy(), intercept=coef[dim].copy())


def var1_predict(params, v):
    """A v + c for one state or a (T, 2N) batch"""
    v = series_array(v) if np.ndim(v) == 2 else np.asarray(v, dtype=float)
    return v @ params.transition.T + params.intercept
