"""Noisy measurement vectors"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from measurement.plan import MeasurementKind
from measurement.prng import Xoshiro256StarStar
from utils.errors import DimensionMismatch

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MeasurementVector:
    """Measured values with availability mask and provenance

    `imputed` flags entries filled with virtual measurements.
    """
    values: np.ndarray
    mask: np.ndarray
    noise_sigmas: np.ndarray
    seed: Optional[int] = None
    imputed: Optional[np.ndarray] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        mask = np.array(self.mask, dtype=bool)
        sigmas = np.array(self.noise_sigmas, dtype=float)
        if values.ndim != 1 or mask.shape != values.shape or sigmas.shape != values.shape:
            raise DimensionMismatch("values, mask and noise_sigmas must be equal-length vectors",
                                    values=list(values.shape), mask=list(mask.shape), sigmas=list(sigmas.shape))
        if not np.all(np.isfinite(values[mask])):
            raise ValueError("available measurements must be finite")
        imputed = np.zeros_like(mask) if self.imputed is None else np.array(self.imputed, dtype=bool)
        for name, arr in (("values", values), ("mask", mask), ("noise_sigmas", sigmas), ("imputed", imputed)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self):
        return self.values.size

    @property
    def n_missing(self):
        return int((~self.mask).sum())

    def with_mask(self, mask):
        """Same readings with a new availability mask (missing entries become NaN)"""
        mask = np.asarray(mask, dtype=bool)
        values = np.where(mask, self.values, np.nan)
        return MeasurementVector(values=values, mask=mask, noise_sigmas=self.noise_sigmas, seed=self.seed)

    def zero_filled(self):
        return np.where(self.mask, self.values, 0.0)


def channel_sigmas(plan, sigma_flow, sigma_mag):
    return np.array([sigma_mag if kind is MeasurementKind.VMAG2 else sigma_flow for kind in plan.kinds])


def add_gaussian_noise(z, plan, sigma_flow, sigma_mag, seed, magnitude_noise=False):
    """z + sigma_m g_m with g drawn from the seeded xoshiro256** stream

    With `magnitude_noise`, |V|^2 channels are perturbed as (|V| + sigma g)^2.
    """
    if sigma_flow < 0 or sigma_mag < 0:
        raise ValueError("noise standard deviations must be non-negative")
    z = np.asarray(z, dtype=float)
    if z.shape != (len(plan),):
        raise DimensionMismatch(f"expected {len(plan)} measurements, got {z.shape}",
                                expected=len(plan), found=list(z.shape))
    sigmas = channel_sigmas(plan, sigma_flow, sigma_mag)
    g = np.array(Xoshiro256StarStar(seed).normals(z.size))

    noisy = np.where(sigmas > 0, z + sigmas * g, z)
    if magnitude_noise:
        mag = np.array([kind is MeasurementKind.VMAG2 for kind in plan.kinds])
        perturb = mag & (sigmas > 0)
        noisy[perturb] = (np.sqrt(np.maximum(z[perturb], 0.0)) + sigmas[perturb] * g[perturb]) ** 2

    return MeasurementVector(values=noisy, mask=np.ones(z.size, dtype=bool), noise_sigmas=sigmas, seed=seed)
