import os
import json
import logging

import yaml
from dotenv import load_dotenv

logger = logging.getLogger(__name__)

DEFAULT_CONFIG = {
    "app_name": "psse-net",
    "version": "0.1.0",
    "log_level": "INFO",
    "seed": 0,
    "workers": 1,
    # grid / power flow
    "pf_tol": 1e-8,
    "pf_max_iter": 20,
    "pf_init": "case",
    # measurements
    "sigma_flow": 0.02,
    "sigma_mag": 0.01,
    "include_injections": False,
    "magnitude_noise": False,
    # load series
    "length": 2500,
    "profile": "sinusoid",
    "amplitude": 0.15,
    "period": 24,
    "load_noise": 0.1,
    "subsample": None,
    # prox-linear solver
    "outer_iters": 29,
    "inner_iters": 100,
    "mu": None,
    "eta": None,
    "init_state": "ones",
    "solver_tol": 1e-10,
    "max_backtracks": 20,
    "safeguard": True,
    # Gauss-Newton
    "gn_max_iter": 30,
    "gn_tol": 1e-10,
    "gn_init": "flat",
    "gn_strict": False,
    # prox-linear net
    "net_blocks": 2,
    "net_layers": 3,
    "activation": "relu",
    "net_init": "random",
    "perturb": 0.0,
    # plain FNN baselines
    "fnn_layers": [6, 8],
    # training
    "epochs": 200,
    "batch_size": 64,
    "learning_rate": 1e-3,
    "loss": "huber",
    "huber_delta": 1.0,
    "beta1": 0.9,
    "beta2": 0.999,
    "adam_eps": 1e-8,
    "train_size": 2000,
    "test_size": 500,
    "runs": 3,
    # forecasting
    "window": 10,
    "rnn_layers": 3,
    "rnn_activation": "relu",
    "forecast_loss": "mse",
    "forecast_source": "truth",
    # monitoring / reports
    "missing_rate": 0.1,
    "report_bus": 1,
    "report_instance": 0,
    "trace_window": 50,
    "plots": False,
}

ENV_OVERRIDES = {
    "PSSE_LOG_LEVEL": ("log_level", str),
    "PSSE_SEED": ("seed", int),
    "PSSE_WORKERS": ("workers", int),
    "PSSE_EPOCHS": ("epochs", int),
}


def read_config_file(config_path):
    """Read a flat key: value config file (YAML or JSON)"""
    with open(config_path, 'r') as f:
        if config_path.endswith(".json"):
            data = json.load(f)
        else:
            data = yaml.safe_load(f)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValueError(f"Config file {config_path} must hold key: value pairs")
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ValueError(f"Config file {config_path} must be flat; nested keys: {nested}")
    return data


def load_config(config_path=None, overrides=None):
    """Load configuration from defaults, config file, environment and overrides"""
    # Load environment variables from .env file if it exists
    load_dotenv()

    config = dict(DEFAULT_CONFIG)

    if config_path:
        file_config = read_config_file(config_path)
        unknown = sorted(set(file_config) - set(DEFAULT_CONFIG))
        if unknown:
            logger.warning(f"Unknown config keys kept as-is: {unknown}")
        config.update(file_config)
        logger.info(f"Loaded configuration from {config_path}")

    for env_name, (key, cast) in ENV_OVERRIDES.items():
        value = os.environ.get(env_name)
        if value:
            try:
                config[key] = cast(value)
            except ValueError:
                logger.warning(f"Ignoring {env_name}={value!r}: not a valid {cast.__name__}")

    # Flags override everything; None means "not given"
    if overrides:
        config.update({k: v for k, v in overrides.items() if v is not None})

    return config


def save_config(config, config_path):
    """Save the effective configuration as flat YAML"""
    try:
        with open(config_path, 'w') as f:
            yaml.safe_dump(config, f, sort_keys=True)
        logger.info(f"Saved configuration to {config_path}")
        return True
    except OSError as e:
        logger.error(f"Error saving config file: {e}")
        return False
