"""Coagulating planar Brownian particles and their kinetic limit.

Thin wrapper over the C++ core. Long-running experiments return the same JSON
reports the command line tool writes, decoded into dictionaries.
"""

import json

from ._core import (
    Config,
    ValidationError,
    beta,
    initial_particle_count,
    log_scale,
    potential_limit,
    simulate,
    solve_pde,
)
from . import _core

__all__ = [
    "Config",
    "ValidationError",
    "beta",
    "initial_particle_count",
    "log_scale",
    "potential_limit",
    "simulate",
    "solve_pde",
    "kinetic_limit",
    "stosszahlansatz",
    "potential_sweep",
    "mass_radius",
]


def _config(cfg):
    if isinstance(cfg, Config):
        return cfg
    if isinstance(cfg, str):
        return Config.from_string(cfg)
    raise TypeError("expected a Config or INI text")


def kinetic_limit(cfg):
    return json.loads(_core.kinetic_limit_json(_config(cfg)))


def stosszahlansatz(cfg):
    return json.loads(_core.stosszahlansatz_json(_config(cfg)))


def potential_sweep(cfg):
    return json.loads(_core.potential_sweep_json(_config(cfg)))


def mass_radius(cfg):
    return json.loads(_core.mass_radius_json(_config(cfg)))
