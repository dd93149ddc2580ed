"""Run configuration: a YAML file, optional preset, and command-line overrides."""
from __future__ import annotations

import copy
import os
from dataclasses import dataclass

import yaml

from .data import SIMULATION_PRESETS
from .fitting import SMCConfig
from .geometry import DomainPartition
from .model import Hyperparams

__all__ = ["ConfigError", "RunConfig", "DEFAULTS", "PRESETS", "load_config", "WORKERS_ENV"]

WORKERS_ENV = "PHPNN_WORKERS"
MODES = ("whole", "decmp1", "decmp2", "mcmc")


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "seed": 0,
    "workers": None,
    "output": "phpnn-run",
    "mode": "whole",
    "level": 0.95,
    "hyper": {"a0": 1.0, "b0": 0.01, "mu0": 0.0, "sigma0_sq": 1.0, "n_planes": 2},
    "smc": {"particles": 1000, "iterations": 100, "schedule": "linear", "rate": 2.0,
            "resampler": "multinomial", "adaptive": False, "ess_threshold": 0.5, "order": "weight-first"},
    "mcmc": {"iterations": 1000, "burn_in": 0},
    "decomposition": {"K": 4, "axis": 0, "cuts": None, "planes_per_cell": None},
    "data": {"generator": None, "train": None, "test": None, "response": "y", "features": None,
             "split": 0.75},
}

PRESETS = {
    "sim1": {"hyper": {"n_planes": 2}, "data": {"generator": dict(SIMULATION_PRESETS["sim1"])}},
    "sim2": {"hyper": {"n_planes": 5}, "data": {"generator": dict(SIMULATION_PRESETS["sim2"])}},
    "sim3": {"hyper": {"n_planes": 40}, "decomposition": {"K": 4, "axis": 0, "planes_per_cell": 10},
             "data": {"generator": dict(SIMULATION_PRESETS["sim3"])}},
    "sim4": {"hyper": {"n_planes": 2}, "data": {"generator": dict(SIMULATION_PRESETS["sim4"])}},
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass(frozen=True)
class RunConfig:
    raw: dict
    hyper: Hyperparams
    smc: SMCConfig
    seed: int
    workers: int
    mode: str
    level: float

    @property
    def output(self) -> str:
        return self.raw["output"]

    @property
    def data(self) -> dict:
        return self.raw["data"]

    @property
    def decomposition(self) -> dict:
        return self.raw["decomposition"]

    @property
    def mcmc(self) -> dict:
        return self.raw["mcmc"]

    def partition(self, lower: float = -1.0, upper: float = 1.0) -> DomainPartition:
        """Slabs along the configured axis; explicit ``cuts`` win over even spacing
        of ``[lower, upper]``."""
        d = self.decomposition
        radius = max(abs(lower), abs(upper))
        if d.get("cuts"):
            return DomainPartition(int(d["axis"]), tuple(d["cuts"]), radius)
        return DomainPartition.even(int(d["axis"]), int(d["K"]), radius, lower, upper)

    def generator(self) -> dict | None:
        g = self.data.get("generator")
        if g is None:
            return None
        if isinstance(g, str):
            if g not in SIMULATION_PRESETS:
                raise ConfigError(f"unknown generator preset {g!r}")
            return dict(SIMULATION_PRESETS[g])
        return dict(g)


def _validate(raw: dict) -> RunConfig:
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        hyper = Hyperparams(**raw["hyper"])
        smc = SMCConfig(**raw["smc"])
    except TypeError as err:
        raise ConfigError(str(err)) from None
    except ValueError as err:
        raise ConfigError(str(err)) from None
    mode = raw["mode"]
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    level = float(raw["level"])
    if not 0 < level < 1:
        raise ConfigError(f"level must lie in (0, 1), got {level}")
    workers = raw.get("workers")
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    if int(workers) < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    seed = raw["seed"]
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")
    dec = raw["decomposition"]
    K = dec.get("K")
    if not isinstance(K, int) or K < 1:
        raise ConfigError(f"decomposition K must be a positive integer, got {K!r}")
    if mode == "decmp1" and hyper.n_planes % K:
        raise ConfigError(f"n_planes={hyper.n_planes} is not divisible by K={K}")
    if dec.get("cuts") and len(dec["cuts"]) + 1 != K:
        raise ConfigError(f"{len(dec['cuts'])} cut points do not give K={K} cells")
    mc = raw["mcmc"]
    if int(mc["iterations"]) < 1 or not 0 <= int(mc["burn_in"]) < int(mc["iterations"]):
        raise ConfigError("mcmc iterations must be >= 1 and burn_in in [0, iterations)")
    split = raw["data"]["split"]
    if not 0 < split < 1:
        raise ConfigError(f"split fraction must lie in (0, 1), got {split}")
    gen = raw["data"].get("generator")
    if isinstance(gen, dict):
        for key in ("p", "n"):
            if not isinstance(gen.get(key), int) or gen[key] < 1:
                raise ConfigError(f"generator {key} must be a positive integer, got {gen.get(key)!r}")
        if not isinstance(gen.get("m"), int) or gen["m"] < 0:
            raise ConfigError(f"generator m must be a non-negative integer, got {gen.get('m')!r}")
        if not gen.get("noise_sd", 0) >= 0:
            raise ConfigError("generator noise_sd must be non-negative")
    elif gen is not None and gen not in SIMULATION_PRESETS:
        raise ConfigError(f"unknown generator preset {gen!r}")
    return RunConfig(raw, hyper, smc, seed, int(workers), mode, level)


def load_config(path: str | None = None, preset: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the preset, then the YAML file, then ``overrides``."""
    raw = copy.deepcopy(DEFAULTS)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        raw = _merge(raw, PRESETS[preset])
    if path is not None:
        with open(path) as fh:
            loaded = yaml.safe_load(fh) or {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        if "preset" in loaded:
            name = loaded.pop("preset")
            if preset is None:
                if name not in PRESETS:
                    raise ConfigError(f"unknown preset {name!r}")
                raw = _merge(raw, PRESETS[name])
        raw = _merge(raw, loaded)
    if overrides:
        raw = _merge(raw, overrides)
    return _validate(raw)
