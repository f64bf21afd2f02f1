"""Run configuration: defaults < config file < environment < command-line flags.

The config file is INI (``configparser``)::

    [data]
    synthetic = default          ; or: manifest = path/to/manifest.json
    [crc]
    lambda1 = 0.01
    lambda2 = 0.5
    beta = median                ; or a positive number
    [split]
    train_per_class = 3
    repeats = 10
    [run]
    method = log_crc
    seed = 7
    [sweep]
    grid = 0.01,0.05,0.1,0.5,1
    [synthetic]                  ; overrides SyntheticSpec fields
    ambient_dim = 12

Section names are only for readability; keys are matched by name. Every key
can also be set through ``SPDCRC_<KEY>`` (e.g. ``SPDCRC_LAMBDA1``).
"""
import configparser
import dataclasses
import os
from dataclasses import dataclass, field, fields
from typing import Optional

from .errors import IoError

ENV_PREFIX = "SPDCRC_"


@dataclass
class RunConfig:
    method: str = "log_crc"
    methods: str = "log_crc,logek_crc"
    lambda1: float = 0.01
    lambda2: float = 0.5
    beta: str = "median"
    seed: int = 0
    repeats: int = 10
    train_per_class: Optional[int] = None
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)
    format: str = "json"
    output: Optional[str] = None
    manifest: Optional[str] = None
    synthetic: Optional[str] = None
    max_queries: Optional[int] = None
    grid: str = "0.0001,0.001,0.005,0.01,0.05,0.1,0.5,1,5,10"
    synthetic_overrides: dict = field(default_factory=dict)

    def beta_value(self):
        """``None`` for the median heuristic, else the fixed positive value."""
        if str(self.beta).lower() == "median":
            return None
        value = float(self.beta)
        if not value > 0:
            raise ValueError("beta must be 'median' or a positive number")
        return value

    def grid_values(self):
        parts = [p for p in str(self.grid).split(",") if p.strip()]
        return [float(p) for p in parts]

    def provenance(self):
        """Deterministic part of the config that is echoed into reports."""
        d = dataclasses.asdict(self)
        for key in ("threads", "output", "format", "max_queries"):
            d.pop(key)
        return d


_KEYS = {f.name: f for f in fields(RunConfig) if f.name != "synthetic_overrides"}


_INT_KEYS = ("seed", "repeats", "train_per_class", "threads", "max_queries")
_FLOAT_KEYS = ("lambda1", "lambda2")


def _coerce(name, raw):
    if raw is None:
        return None
    if name in _INT_KEYS:
        return int(raw)
    if name in _FLOAT_KEYS:
        return float(raw)
    return str(raw)


def parse_scalar(raw):
    """Parse an override value: none, true/false, int, else float."""
    text = str(raw).strip()
    if text.lower() in ("none", ""):
        return None
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    try:
        return int(text)
    except ValueError:
        return float(text)


def read_config_file(path):
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise IoError(f"cannot read config {path}: {exc}") from exc
    values, synthetic = {}, {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            if section == "synthetic":
                synthetic[key] = parse_scalar(raw)
            elif key in _KEYS:
                values[key] = raw
            else:
                raise ValueError(f"unknown config key {key!r} in [{section}]")
    return values, synthetic


def resolve(flags, config_path=None, environ=None):
    """Merge defaults, file, environment and explicit flags (in that order).

    ``flags`` maps key names to values; ``None`` means "not given".
    """
    environ = os.environ if environ is None else environ
    cfg = RunConfig()
    layers = []
    if config_path:
        values, synthetic = read_config_file(config_path)
        layers.append(values)
        cfg.synthetic_overrides = synthetic
    layers.append({k: environ[ENV_PREFIX + k.upper()] for k in _KEYS if ENV_PREFIX + k.upper() in environ})
    layers.append({k: v for k, v in flags.items() if k in _KEYS and v is not None})
    for layer in layers:
        for key, raw in layer.items():
            setattr(cfg, key, _coerce(key, raw))
    return cfg
