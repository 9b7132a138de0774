"""Virtual measurements from a forecast state"""
import logging

import numpy as np

from measurement.noise import MeasurementVector
from measurement.quadratic import evaluate_measurements

logger = logging.getLogger(__name__)


def impute_with_forecast(z, v_forecast, forms):
    """Fill missing entries of z with h(v_forecast); available entries are kept as-is"""
    missing = ~z.mask
    if not missing.any():
        return z
    virtual = evaluate_measurements(forms, v_forecast)
    values = np.where(missing, virtual, z.values)
    logger.debug(f"Imputed {int(missing.sum())}/{len(z)} measurements from forecast")
    return MeasurementVector(values=values, mask=np.ones(len(z), dtype=bool),
                             noise_sigmas=z.noise_sigmas, seed=z.seed, imputed=missing | z.imputed)
