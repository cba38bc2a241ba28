"""Experiment config files: INI-style sections mirroring the parameter blocks.

Every key is optional (defaults are the reference-scenario values); unknown
sections or keys are hard errors so typos cannot silently change a run.

Example::

    [topology]
    num_cus = 2
    num_d2d = 2

    [learning]
    horizon = 10000

    [experiment]
    policy = ebriq
    num_replications = 200
    seed = 42
    fixed_topology = true
"""

from __future__ import annotations

import configparser
import dataclasses
from pathlib import Path
from typing import Optional

from .errors import ConfigurationError
from .harness import ExperimentConfig
from .params import LearningParams, SystemParams, TopologyParams

__all__ = ["load_config", "apply_overrides"]

_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}

# section -> key -> (target field, converter)
_SCHEMA = {
    "topology": {
        "num_cus": ("num_cus", int),
        "num_d2d": ("num_d2d", int),
        "cell_radius": ("cell_radius", float),
        "cu_min_bs_distance": ("cu_min_bs_distance", float),
        "dt_bs_distance_low": ("dt_bs_distance_range.0", float),
        "dt_bs_distance_high": ("dt_bs_distance_range.1", float),
        "d2d_link_low": ("d2d_link_range.0", float),
        "d2d_link_high": ("d2d_link_range.1", float),
        "path_loss_exponent": ("path_loss_exponent", float),
    },
    "system": {
        "p_c": ("p_c", float),
        "p_d": ("p_d", float),
        "n_0": ("n_0", float),
        "alpha_low": ("alpha_low", float),
        "alpha_high": ("alpha_high", float),
        "theta": ("theta", float),
        "theta_prime": ("theta_prime", float),
    },
    "learning": {
        "epsilon0": ("epsilon0", float),
        "zeta": ("zeta", float),
        "xi": ("xi", float),
        "memory_length": ("memory_length", int),
        "horizon": ("horizon", int),
    },
    "experiment": {
        "policy": ("policy", str),
        "num_replications": ("num_replications", int),
        "seed": ("seed", int),
        "fixed_topology": ("fixed_topology", "bool"),
        "throughput_mode": ("throughput_mode", str),
    },
}


def _convert(raw: str, converter, context: str):
    if converter == "bool":
        try:
            return _BOOL[raw.strip().lower()]
        except KeyError:
            raise ConfigurationError(f"{context}: expected a boolean, got {raw!r}") from None
    try:
        return converter(raw)
    except ValueError:
        raise ConfigurationError(
            f"{context}: expected {converter.__name__}, got {raw!r}"
        ) from None


def _section_values(parser, section: str) -> dict:
    values = {}
    if not parser.has_section(section):
        return values
    schema = _SCHEMA[section]
    for key, raw in parser.items(section):
        if key not in schema:
            raise ConfigurationError(f"unknown key {key!r} in section [{section}]")
        field, converter = schema[key]
        values[field] = _convert(raw, converter, f"[{section}] {key}")
    return values


def _pair_fields(values: dict, base: str, default: tuple) -> dict:
    """Collapse 'name.0'/'name.1' entries into one tuple field."""
    low = values.pop(f"{base}.0", default[0])
    high = values.pop(f"{base}.1", default[1])
    if (low, high) != default:
        values[base] = (low, high)
    return values


def load_config(path) -> ExperimentConfig:
    """Parse a config file into a fully validated ExperimentConfig."""
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config {path}: {exc}") from exc

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigurationError(f"unknown section [{section}] in {path}")

    topo_values = _section_values(parser, "topology")
    defaults = TopologyParams()
    _pair_fields(topo_values, "dt_bs_distance_range", defaults.dt_bs_distance_range)
    _pair_fields(topo_values, "d2d_link_range", defaults.d2d_link_range)
    topology = TopologyParams(**topo_values)
    system = SystemParams(**_section_values(parser, "system"))
    learning = LearningParams(**_section_values(parser, "learning"))
    return ExperimentConfig(
        topology=topology, system=system, learning=learning,
        **_section_values(parser, "experiment"),
    )


def apply_overrides(config: ExperimentConfig, policy: Optional[str] = None,
                    seed: Optional[int] = None, replications: Optional[int] = None,
                    periods: Optional[int] = None) -> ExperimentConfig:
    """Command-line overrides beat file values; None leaves a value alone."""
    updates = {}
    if policy is not None:
        updates["policy"] = policy
    if seed is not None:
        updates["seed"] = seed
    if replications is not None:
        updates["num_replications"] = replications
    if periods is not None:
        updates["learning"] = dataclasses.replace(config.learning, horizon=periods)
    return dataclasses.replace(config, **updates) if updates else config
