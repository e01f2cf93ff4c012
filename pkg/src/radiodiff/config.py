"""Run configuration: one JSON document addressed by dotted key paths.

Nested objects and dotted keys are interchangeable on disk; in memory a
config is always the flat dotted form, e.g. {"diffusion.T": 1000,
"election.lambda": 0.7}.  Command-line assignments override file values.
"""

from __future__ import annotations

import json
import os

from .election import ElectionParams
from .errors import ConfigurationError

ENV_VAR = "RADIODIFF_CONFIG"

__all__ = ["ENV_VAR", "load_config", "flatten", "apply_overrides",
           "election_params", "config_get"]


def flatten(doc, prefix=""):
    out = {}
    for key, value in doc.items():
        path = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(flatten(value, f"{path}."))
        else:
            out[path] = value
    return out


def load_config(path=None):
    """Read a config file; fall back to $RADIODIFF_CONFIG, then empty."""
    if path is None:
        path = os.environ.get(ENV_VAR)
    if path is None:
        return {}
    if not os.path.exists(path):
        raise ConfigurationError(f"config file not found: {path}")
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigurationError("config root must be a JSON object")
    return flatten(doc)


def apply_overrides(config, assignments):
    """Apply key=value strings; values parse as JSON, else stay strings."""
    out = dict(config)
    for item in assignments or ():
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigurationError(f"override {item!r} is not of the form key=value")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def config_get(config, key, default=None):
    return config.get(key, default)


_ELECTION_KEYS = {
    "lambda": "lam",
    "lam": "lam",
    "alpha": "alpha",
    "sigma": "sigma",
    "ring_radii": "ring_radii",
    "angular_samples": "angular_samples",
    "ray_count": "ray_count",
    "ray_start": "ray_start",
    "nms_radius": "nms_radius",
    "min_peak": "min_peak",
    "max_peaks": "max_peaks",
    "fit_annulus": "fit_annulus",
    "k_branch": "k_branch",
    "log_sigma": "log_sigma",
    "high_power_quantile": "high_power_quantile",
    "res_inside_lambda": "res_inside_lambda",
}


def election_params(config):
    """ElectionParams from the election.* keys of a flat config."""
    kwargs = {}
    for key, value in config.items():
        if not key.startswith("election."):
            continue
        name = key.split(".", 1)[1]
        if name not in _ELECTION_KEYS:
            raise ConfigurationError(f"unknown election parameter {name!r}")
        field = _ELECTION_KEYS[name]
        if field in ("ring_radii", "fit_annulus"):
            value = tuple(value)
        kwargs[field] = value
    return ElectionParams(**kwargs)
