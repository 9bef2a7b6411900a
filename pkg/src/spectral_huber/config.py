"""Experiment configuration: one YAML file, flags override file values."""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Optional, Sequence

import yaml

from .exceptions import ConfigError


@dataclass
class ExperimentConfig:
    """Flat key set shared by the config file and the command line."""

    # problem location and outputs
    problem: Optional[str] = None
    out: Optional[str] = None
    seed: int = 0
    # generator
    m_x: int = 32
    m_y: int = 32
    n_frames: int = 8
    coils: int = 4
    rank: int = 3
    acceleration: float = 4.0
    noise_sigma: float = 0.01
    patch: Sequence[int] = (4, 4)
    # regularizer
    potential: str = "hyperbola"
    delta: float = 1e-3
    K: Optional[int] = None
    # solver
    method: str = "ncg"
    max_iter: int = 100
    lam: Optional[float] = None
    eta: float = 0.0
    n_alpha: int = 1
    alpha0: float = 0.0
    curvature: str = "GR"
    fast_step: bool = False
    sbar: Sequence[int] = (0, 0)
    deterministic_reduce: bool = False
    store_every: int = 1

    def __post_init__(self):
        self.patch = tuple(int(v) for v in self.patch)
        self.sbar = tuple(int(v) for v in self.sbar)
        if len(self.patch) != 2:
            raise ConfigError("patch must be a pair [n_x, n_y]")
        if len(self.sbar) != 2:
            raise ConfigError("sbar must be a pair [s_x, s_y]")


_KEYS = {f.name for f in fields(ExperimentConfig)}


def load_config_file(path) -> dict:
    """Read a YAML mapping, rejecting unknown keys."""
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    unknown = sorted(set(data) - _KEYS)
    if unknown:
        raise ConfigError(f"{path}: unknown config keys: {', '.join(unknown)}")
    return data


def build_config(file_path=None, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Defaults, then file values, then explicit (non-None) overrides."""
    data = {}
    if file_path is not None:
        data.update(load_config_file(file_path))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _KEYS:
            raise ConfigError(f"unknown config key: {key}")
        data[key] = value
    try:
        return ExperimentConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
