"""Run configuration: JSON schema validation, defaults, hashing."""

from __future__ import annotations

import copy
import hashlib
import json
from importlib import resources

import jsonschema

SCHEMA_VERSION = 1
RADICAL_PAIR_MODES = ("radical-pair", "sweep-orientation", "sweep-coherence")
PUMP_MODES = ("pump-steady", "pump-transient")

DEFAULTS = {
    "open_system": {"tau_c_s": None, "k_back_per_s": 0.0, "k_prot_per_s": 0.0, "channel": "local-z"},
    "initial_state": {"nuclear": "mixed"},
    "numerics": {"dt_s": None, "t_max_s": None, "trace_floor": 1e-6},
    "constants": {"gamma_e_rad_per_s_T": 1.760859630e11},
    "output": {"path": None, "format": "csv"},
}
# sections filled with defaults, per mode
_SECTIONS = {
    "radical-pair": ("open_system", "initial_state", "numerics", "constants"),
    "sweep-orientation": ("open_system", "initial_state", "numerics", "constants"),
    "sweep-coherence": ("open_system", "initial_state", "numerics", "constants"),
    "pump-steady": ("constants",),
    "pump-transient": ("constants",),
    "classify-scenario": ("constants",),
}


class ConfigError(ValueError):
    """Configuration does not validate; carries the offending field path."""


def load_schema() -> dict:
    text = resources.files("qmeter.cli").joinpath("run_config.schema.json").read_text()
    return json.loads(text)


_VALIDATOR = None


def _validator():
    global _VALIDATOR
    if _VALIDATOR is None:
        schema = load_schema()
        cls = jsonschema.validators.validator_for(schema)
        _VALIDATOR = cls(schema)
    return _VALIDATOR


def validate(config: dict) -> None:
    errors = list(_validator().iter_errors(config))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        raise ConfigError(f"config field {err.json_path}: {err.message}")


def normalize(config: dict) -> dict:
    """Validate and fill defaults for the sections the mode uses."""
    validate(config)
    out = copy.deepcopy(config)
    for section in _SECTIONS[out["mode"]] + ("output",):
        merged = dict(DEFAULTS[section])
        merged.update(out.get(section) or {})
        out[section] = merged
    # re-validate so defaults can never smuggle in an invalid config
    validate(out)
    return out


def canonical_json(config: dict) -> str:
    return json.dumps(config, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(config: dict) -> str:
    """SHA-256 of the result-affecting part of a normalised config."""
    body = {k: v for k, v in config.items() if k != "output"}
    return hashlib.sha256(canonical_json(body).encode()).hexdigest()


def load(path: str) -> dict:
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from None
