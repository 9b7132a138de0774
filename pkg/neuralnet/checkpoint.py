"""JSON checkpoints (`ckpt/1`)"""
import json
import logging
import os

import numpy as np

from neuralnet.params import family_class
from utils.errors import CorruptFile, IoError, SchemaMismatch

logger = logging.getLogger(__name__)

CHECKPOINT_SCHEMA = "ckpt/1"


def checkpoint_to_dict(params, train_config=None, seed=None, history=None):
    return {
        "schema": CHECKPOINT_SCHEMA,
        "family": params.family,
        "arch": params.arch,
        "tensors": {name: {"shape": list(t.shape), "data": t.reshape(-1).tolist()}
                    for name, t in params.tensors.items()},
        "train_config": train_config.to_dict() if hasattr(train_config, "to_dict") else train_config,
        "seed": seed,
        "history": list(history) if history is not None else None,
    }


def checkpoint_from_dict(data):
    schema = data.get("schema")
    if schema != CHECKPOINT_SCHEMA:
        raise SchemaMismatch(f"expected checkpoint schema {CHECKPOINT_SCHEMA}, found {schema}",
                             expected=CHECKPOINT_SCHEMA, found=schema,
                             hint="re-train the model or re-export it with the current version")
    try:
        cls = family_class(data["family"])
        tensors = {}
        for name, entry in data["tensors"].items():
            flat = np.asarray(entry["data"], dtype=float)
            tensors[name] = flat.reshape(entry["shape"])
        return cls(tensors=tensors, arch=data["arch"])
    except (KeyError, ValueError, TypeError) as e:
        raise CorruptFile(f"checkpoint content is inconsistent: {e}")


def save_checkpoint(path, params, train_config=None, seed=None, history=None):
    data = checkpoint_to_dict(params, train_config, seed, history)
    try:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w") as f:
            json.dump(data, f)
    except OSError as e:
        raise IoError(f"cannot write checkpoint {path}: {e}", path=str(path))
    logger.info(f"Saved {params.family} checkpoint ({params.param_count} parameters) to {path}")
    return path


def load_checkpoint(path):
    """Return (params, metadata) where metadata holds train_config, seed and history"""
    try:
        with open(path) as f:
            data = json.load(f)
    except OSError as e:
        raise IoError(f"cannot read checkpoint {path}: {e}", path=str(path))
    except json.JSONDecodeError as e:
        raise CorruptFile(f"checkpoint {path} is not valid JSON: {e}", path=str(path))
    params = checkpoint_from_dict(data)
    meta = {key: data.get(key) for key in ("train_config", "seed", "history")}
    return params, meta
