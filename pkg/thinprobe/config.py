"""
Runtime settings shared across thinprobe modules.

Settings are resolved in three layers, later layers winning:

1. ``DEFAULT_SETTINGS`` below
2. a YAML file (``thinprobe.yaml`` in the working directory, or an explicit path)
3. environment variables ``THINPROBE_<KEY>`` (e.g. ``THINPROBE_N_JOBS=4``)
"""

import logging
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

import yaml

from .errors import ConfigurationError

logger = logging.getLogger(__name__)

SETTINGS_FILE = "thinprobe.yaml"

DEFAULT_SETTINGS = {
    # geometry
    "parallel_tolerance": 1e-10,
    "amplitude_bound": 1.0,
    "tangent_resolution": 32,
    # cgo
    "overflow_limit": 700.0,
    "max_s_eps": 0.5,
    # sweeps and verdicts
    "slope_tolerance": 0.15,
    "theorem_slope_tolerance": 0.2,
    "floor": 1e-14,
    "lower_bound_fraction": 0.5,
    # solver
    "root_tol": 1e-12,
    "root_maxiter": 50,
    "linear_residual": 1e-10,
    "cfl_safety": 0.25,
    # admissibility
    "holder_samples": 1000,
    # execution
    "n_jobs": 1,
}


@dataclass(frozen=True)
class Settings:
    parallel_tolerance: float = DEFAULT_SETTINGS["parallel_tolerance"]
    amplitude_bound: float = DEFAULT_SETTINGS["amplitude_bound"]
    tangent_resolution: int = DEFAULT_SETTINGS["tangent_resolution"]
    overflow_limit: float = DEFAULT_SETTINGS["overflow_limit"]
    max_s_eps: float = DEFAULT_SETTINGS["max_s_eps"]
    slope_tolerance: float = DEFAULT_SETTINGS["slope_tolerance"]
    theorem_slope_tolerance: float = DEFAULT_SETTINGS["theorem_slope_tolerance"]
    floor: float = DEFAULT_SETTINGS["floor"]
    lower_bound_fraction: float = DEFAULT_SETTINGS["lower_bound_fraction"]
    root_tol: float = DEFAULT_SETTINGS["root_tol"]
    root_maxiter: int = DEFAULT_SETTINGS["root_maxiter"]
    linear_residual: float = DEFAULT_SETTINGS["linear_residual"]
    cfl_safety: float = DEFAULT_SETTINGS["cfl_safety"]
    holder_samples: int = DEFAULT_SETTINGS["holder_samples"]
    n_jobs: int = DEFAULT_SETTINGS["n_jobs"]

    def updated(self, **changes):
        return replace(self, **_coerce(changes))


def _coerce(values):
    types = {f.name: f.type for f in fields(Settings)}
    out = {}
    for key, value in values.items():
        if key not in types:
            raise ConfigurationError(f"unknown setting '{key}'")
        kind = int if types[key] in (int, "int") else float
        try:
            out[key] = kind(value)
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"setting '{key}': cannot use {value!r} ({e})") from e
    return out


def load_settings(path=None, environ=None):
    """Load settings from defaults, an optional YAML file and the environment."""
    config = dict(DEFAULT_SETTINGS)

    config_file = Path(path) if path is not None else Path.cwd() / SETTINGS_FILE
    if config_file.exists():
        try:
            with open(config_file, "r", encoding="utf-8") as f:
                file_config = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigurationError(f"could not read settings file {config_file}: {e}") from e
        if not isinstance(file_config, dict):
            raise ConfigurationError(f"settings file {config_file} must hold a mapping")
        config.update(file_config)
        logger.debug("settings loaded from %s", config_file)
    elif path is not None:
        raise ConfigurationError(f"settings file {config_file} not found")

    # Environment variables override the file
    environ = os.environ if environ is None else environ
    for key in DEFAULT_SETTINGS:
        env_key = f"THINPROBE_{key.upper()}"
        if environ.get(env_key):
            config[key] = environ[env_key]

    return Settings(**_coerce(config))


_active = None


def get_settings():
    """Return the process-wide settings, loading them on first use."""
    global _active
    if _active is None:
        _active = load_settings()
    return _active


def set_settings(settings):
    """Install ``settings`` as the process-wide settings (used by the CLI and tests)."""
    global _active
    _active = settings
    return settings


def call_with_settings(settings, function, *args):
    """Run ``function(*args)`` under ``settings``; joblib worker processes start from defaults."""
    set_settings(settings)
    return function(*args)
