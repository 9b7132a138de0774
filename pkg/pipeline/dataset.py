"""Measurement/state datasets: generation, splitting and the `dataset/1` file format"""
import hashlib
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from grid.admittance import build_admittance
from grid.model import StateVector
from grid.power_flow import DEFAULT_MAX_ITER, DEFAULT_TOL, newton_power_flow
from grid.serialization import grid_fingerprint
from measurement.noise import MeasurementVector, add_gaussian_noise, channel_sigmas
from measurement.plan import plan_from_json, plan_to_json
from measurement.prng import derive_seed
from measurement.quadratic import build_measurement_matrices, evaluate_measurements
from pipeline.loads import scale_loads
from solvers.prox_linear import pin_reference
from utils.errors import CorruptFile, DatasetGenerationError, Diverged, IoError, SchemaMismatch, SingularJacobian

logger = logging.getLogger(__name__)

DATASET_SCHEMA = "dataset/1"


@dataclass(frozen=True)
class NoiseConfig:
    sigma_flow: float = 0.02
    sigma_mag: float = 0.01
    magnitude_noise: bool = False

    @classmethod
    def from_config(cls, config):
        return cls(sigma_flow=float(config.get("sigma_flow", 0.02)),
                   sigma_mag=float(config.get("sigma_mag", 0.01)),
                   magnitude_noise=bool(config.get("magnitude_noise", False)))

    def to_dict(self):
        return {"sigma_flow": self.sigma_flow, "sigma_mag": self.sigma_mag, "magnitude_noise": self.magnitude_noise}


@dataclass(frozen=True)
class Dataset:
    """Time-ordered (z_t, v_t) pairs; missing readings are NaN with mask False"""
    times: np.ndarray
    measurements: np.ndarray
    masks: np.ndarray
    states: np.ndarray
    sigmas: np.ndarray
    plan: object
    noise: NoiseConfig
    seed: int
    grid_fingerprint: str
    provenance: dict = field(default_factory=dict)
    # positions in the generated series; None means 0..len-1
    indices: Optional[np.ndarray] = None

    def __len__(self):
        return self.times.size

    @property
    def source_indices(self):
        if self.indices is None:
            return np.arange(len(self))
        return self.indices

    @property
    def n_measurements(self):
        return self.measurements.shape[1]

    @property
    def n_buses(self):
        return self.states.shape[1] // 2

    def sample(self, j):
        z = MeasurementVector(values=self.measurements[j], mask=self.masks[j], noise_sigmas=self.sigmas,
                              seed=derive_seed(self.seed, int(self.source_indices[j])))
        return self.times[j], z, StateVector(self.states[j])

    def samples(self):
        for j in range(len(self)):
            yield self.sample(j)

    def training_arrays(self):
        return np.where(self.masks, self.measurements, 0.0), self.states

    def subset(self, index):
        index = np.asarray(index)
        return Dataset(times=self.times[index], measurements=self.measurements[index], masks=self.masks[index],
                       states=self.states[index], sigmas=self.sigmas, plan=self.plan, noise=self.noise,
                       seed=self.seed, grid_fingerprint=self.grid_fingerprint, provenance=dict(self.provenance),
                       indices=self.source_indices[index])


def split_dataset(dataset, n_train, n_test=None):
    """Contiguous first-block train / following-block test split"""
    if not 0 < n_train < len(dataset):
        raise ValueError(f"n_train must lie in 1..{len(dataset) - 1}, got {n_train}")
    stop = len(dataset) if n_test is None else min(len(dataset), n_train + n_test)
    return dataset.subset(np.arange(n_train)), dataset.subset(np.arange(n_train, stop))


def generate_dataset(grid, series, plan, noise=None, seed=0, workers=1, pf_tol=DEFAULT_TOL,
                     pf_max_iter=DEFAULT_MAX_ITER, pf_init="case"):
    """Power flow, measurement evaluation and noise for every step of a load series"""
    noise = noise or NoiseConfig()
    plan.validate(grid)
    loads = scale_loads(series, grid)
    adm = build_admittance(grid)
    forms = build_measurement_matrices(adm, plan)
    ref = forms.reference_coord
    slack = grid.buses[grid.slack_index]
    if slack.va_init != 0.0:
        logger.warning(f"Slack bus {slack.id} angle is {slack.va_init:.6f} rad; "
                       f"ground-truth states are rotated to a zero reference angle")

    def step(j):
        grid_t = grid.with_loads(loads.pd[j], loads.qd[j])
        try:
            result = newton_power_flow(grid_t, tol=pf_tol, max_iter=pf_max_iter, init=pf_init, adm=adm)
        except (Diverged, SingularJacobian) as e:
            raise DatasetGenerationError(f"power flow failed at step t={loads.times[j]}: {e}",
                                         t=int(loads.times[j]), cause=type(e).__name__)
        v = pin_reference(result.state.values, ref)
        z_clean = evaluate_measurements(forms, v)
        z = add_gaussian_noise(z_clean, plan, noise.sigma_flow, noise.sigma_mag, derive_seed(seed, j),
                               magnitude_noise=noise.magnitude_noise)
        return v, z.values

    logger.info(f"Generating {len(loads)} samples on {grid.name} ({len(plan)} measurements, "
                f"{workers} worker(s))")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(step, range(len(loads))))
    else:
        results = [step(j) for j in range(len(loads))]

    states = np.array([r[0] for r in results])
    measurements = np.array([r[1] for r in results])
    sigmas = channel_sigmas(plan, noise.sigma_flow, noise.sigma_mag)
    provenance = {"case": grid.name, "load_source": loads.source, "pf_tol": pf_tol, "pf_init": pf_init}
    return Dataset(times=np.asarray(loads.times), measurements=measurements,
                   masks=np.ones(measurements.shape, dtype=bool), states=states, sigmas=sigmas, plan=plan,
                   noise=noise, seed=int(seed), grid_fingerprint=grid_fingerprint(grid), provenance=provenance)


def _payload(dataset):
    m, dim = dataset.n_measurements, dataset.states.shape[1]
    frame = pd.DataFrame({"t": dataset.times})
    z = pd.DataFrame(dataset.measurements, columns=[f"z_{i}" for i in range(1, m + 1)])
    v = pd.DataFrame(dataset.states, columns=[f"v_{i}" for i in range(1, dim + 1)])
    mask = pd.DataFrame(dataset.masks.astype(int), columns=[f"mask_{i}" for i in range(1, m + 1)])
    frame = pd.concat([frame, z, v, mask], axis=1)
    return frame.to_csv(index=False, float_format="%.17g", lineterminator="\n")


def save_dataset(dataset, path):
    payload = _payload(dataset)
    header = {
        "schema": DATASET_SCHEMA,
        "checksum": hashlib.sha256(payload.encode("utf-8")).hexdigest(),
        "n_samples": len(dataset),
        "n_measurements": dataset.n_measurements,
        "state_dim": int(dataset.states.shape[1]),
        "plan": json.loads(plan_to_json(dataset.plan)),
        "noise": dataset.noise.to_dict(),
        "sigmas": dataset.sigmas.tolist(),
        "seed": dataset.seed,
        "grid_fingerprint": dataset.grid_fingerprint,
        "provenance": dataset.provenance,
    }
    if dataset.indices is not None:
        header["indices"] = dataset.indices.tolist()
    try:
        with open(path, "w", newline="") as f:
            f.write(json.dumps(header, sort_keys=True) + "\n")
            f.write(payload)
    except OSError as e:
        raise IoError(f"cannot write dataset {path}: {e}", path=str(path))
    logger.info(f"Saved dataset with {len(dataset)} samples to {path}")
    return path


def load_dataset(path):
    try:
        with open(path, newline="") as f:
            text = f.read()
    except OSError as e:
        raise IoError(f"cannot read dataset {path}: {e}", path=str(path))
    first, _, payload = text.partition("\n")
    try:
        header = json.loads(first)
    except json.JSONDecodeError as e:
        raise CorruptFile(f"dataset header in {path} is not valid JSON: {e}", path=str(path))

    schema = header.get("schema")
    if schema != DATASET_SCHEMA:
        raise SchemaMismatch(f"dataset {path} has schema {schema}, expected {DATASET_SCHEMA}",
                             expected=DATASET_SCHEMA, found=schema,
                             hint="regenerate the dataset with `gen-data` from its recorded provenance")
    if hashlib.sha256(payload.encode("utf-8")).hexdigest() != header.get("checksum"):
        raise CorruptFile(f"dataset {path} failed its checksum", path=str(path))

    try:
        frame = pd.read_csv(io.StringIO(payload), float_precision="round_trip")
        m, dim = int(header["n_measurements"]), int(header["state_dim"])
        times = frame["t"].to_numpy()
        measurements = frame[[f"z_{i}" for i in range(1, m + 1)]].to_numpy(dtype=float)
        states = frame[[f"v_{i}" for i in range(1, dim + 1)]].to_numpy(dtype=float)
        masks = frame[[f"mask_{i}" for i in range(1, m + 1)]].to_numpy(dtype=int).astype(bool)
        plan = plan_from_json(json.dumps(header["plan"]))
        noise = NoiseConfig(**header["noise"])
    except (KeyError, ValueError) as e:
        raise CorruptFile(f"dataset {path} payload is inconsistent with its header: {e}", path=str(path))

    return Dataset(times=times, measurements=measurements, masks=masks, states=states,
                   sigmas=np.asarray(header["sigmas"], dtype=float), plan=plan, noise=noise,
                   seed=int(header["seed"]), grid_fingerprint=header["grid_fingerprint"],
                   provenance=header.get("provenance", {}),
                   indices=None if "indices" not in header else np.asarray(header["indices"], dtype=int))
