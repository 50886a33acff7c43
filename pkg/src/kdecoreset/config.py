"""Run configuration: defaults, config-file keys, and environment overrides.

Precedence, lowest to highest: built-in defaults, config file (--config,
JSON object), environment variables (KDECORESET_<KEY>), command-line flags.
Every output artifact embeds the fully resolved configuration so a run can
be reproduced from the artifact alone.
"""

import json
import os
from dataclasses import asdict, dataclass, fields

from .schedule import default_constants

__all__ = ["RunConfig", "resolve_config", "ENV_PREFIX"]

ENV_PREFIX = "KDECORESET_"

_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


@dataclass
class RunConfig:
    """Resolved parameters for one CLI invocation."""

    input: str = None
    output: str = None
    dim: int = None
    target_size: int = None
    epsilon: float = None
    seed: int = 0
    c0: float = None
    c1: float = None
    c_big: float = None
    strict_constants: bool = False
    grid_budget: int = 4096
    resolution: int = None
    eval_budget: int = 131072
    retry_budget: int = 64
    presample: bool = False
    emit_colorings: bool = True
    coreset: str = None
    sizes: tuple = None
    num_seeds: int = 20

    def constants_for(self, d):
        """Schedule constants for dimension d under this configuration."""
        return default_constants(
            d, c0=self.c0, c1=self.c1, c_big=self.c_big,
            strict=self.strict_constants, grid_budget=self.grid_budget,
        )

    def to_dict(self):
        d = asdict(self)
        if d["sizes"] is not None:
            d["sizes"] = list(d["sizes"])
        return d


def _parse_bool(value):
    if isinstance(value, bool):
        return value
    s = str(value).strip().lower()
    if s in _BOOL_TRUE:
        return True
    if s in _BOOL_FALSE:
        return False
    raise ValueError(f"cannot parse boolean config value {value!r}")


def _parse_sizes(value):
    if isinstance(value, str):
        value = [v for v in value.split(",") if v]
    return tuple(int(v) for v in value)


_COERCERS = {
    "input": str,
    "output": str,
    "dim": int,
    "target_size": int,
    "epsilon": float,
    "seed": int,
    "c0": float,
    "c1": float,
    "c_big": float,
    "strict_constants": _parse_bool,
    "grid_budget": int,
    "resolution": int,
    "eval_budget": int,
    "retry_budget": int,
    "presample": _parse_bool,
    "emit_colorings": _parse_bool,
    "coreset": str,
    "sizes": _parse_sizes,
    "num_seeds": int,
}

assert set(_COERCERS) == {f.name for f in fields(RunConfig)}


def resolve_config(cli_values, config_path=None, environ=None):
    """Merge defaults, config file, environment, and CLI values.

    cli_values: mapping of field name -> value or None (None = not given).
    """
    environ = os.environ if environ is None else environ
    cfg = RunConfig()
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError("config file must contain a JSON object")
        for key, value in data.items():
            if key not in _COERCERS:
                raise ValueError(f"unknown config key {key!r}")
            setattr(cfg, key, _COERCERS[key](value))
    for name, coerce in _COERCERS.items():
        env_val = environ.get(ENV_PREFIX + name.upper())
        if env_val is not None:
            setattr(cfg, name, coerce(env_val))
    for name, value in cli_values.items():
        if value is not None and name in _COERCERS:
            setattr(cfg, name, _COERCERS[name](value))
    return cfg
