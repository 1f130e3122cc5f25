"""Experiment configuration: YAML documents validated against a JSON schema."""

import copy
import json
from importlib import resources
from pathlib import Path

import jsonschema
import yaml

from .errors import ConfigError
from .frechet import KarcherConfig
from .regression import OptimizerConfig, RegressionConfig
from .selection import SelectionConfig
from .simulation import ArimaSpec, BivariateConfig, PlantedLagConfig, PolarFamily, VmfSpec

DEFAULTS = {
    "simulation": {
        "generator": "bivariate",
        "n": 100,
        "n_nodes": 1000,
        "seed": 0,
        "kappa": 1.5,
        "arima": {"ar": [0.8], "i": 0, "ma": [], "noise_sd": 0.3, "burn_in": 500},
        "sde": {"mu": 0.1, "x0": [1.0, 1.0], "interval": [0.0, 1.0], "correlated": False,
                "correlation": 0.5, "antithetic": False},
        "polar": {"a_start": 1.0, "a_end": 0.7, "b_start": 0.2, "b_end": 0.5, "eps": 1e-3},
        "cap": {"radius": 0.3, "rho": 0.6, "n_modes": 4, "decay": 0.7},
        "planted": {"lags": [1, 2], "coefs": [0.5, 0.5], "radius": 0.6, "n_modes": 6,
                    "decay": 0.85, "noise": 0.02, "rho": 0.0},
    },
    "model": {
        "m": 2,
        "lag_threshold": 0.2,
        "resolution": 200,
        "ridge": None,
        "rel_cutoff": 1e-3,
        "kernel_exponent": 1.0,
        "kernel_cutoff": 1e-3,
        "submanifold": "window",
        "weight_covariance": "smoothed",
        "karcher": {"max_iters": 100, "tol": 1e-10, "step": 1.0},
        "optimizer": {"initial_step": 0.5, "min_step": 1e-6, "max_sweeps": 500, "coord_cap": 10.0},
    },
    "query": {"end": None, "holdout": False},
    "selection": {"k_nn": None, "weight_quantile": 0.2, "s_star": [], "window": None,
                  "scenarios": [1, 2]},
    "io": {"out": "out", "plots": True},
}


def schema():
    return json.loads(resources.files("geocurve").joinpath("schema.json").read_text())


def deep_merge(base, update):
    out = copy.deepcopy(base)
    for k, v in update.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def apply_override(cfg, assignment):
    """Apply ``a.b.c=value``; the value is parsed as YAML (numbers, lists, null...)."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not of the form key=value")
    key, raw = assignment.split("=", 1)
    parts = key.strip().split(".")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as err:
        raise ConfigError(f"cannot parse value of {key}: {err}") from None
    node = cfg
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"{key}: {p} is not a section")
    node[parts[-1]] = value
    return cfg


def validate(cfg):
    try:
        jsonschema.validate(cfg, schema())
    except jsonschema.ValidationError as err:
        where = ".".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {err.message}") from None
    return cfg


def load_config(path=None, overrides=(), seed=None, out=None):
    """Defaults, then the YAML file, then ``--set`` overrides, ``--seed`` and ``--out``."""
    user = {}
    if path is not None:
        try:
            user = yaml.safe_load(Path(path).read_text()) or {}
        except OSError as err:
            raise ConfigError(f"cannot read config: {err}") from None
        except yaml.YAMLError as err:
            raise ConfigError(f"invalid YAML in {path}: {err}") from None
        if not isinstance(user, dict):
            raise ConfigError("config document must be a mapping")
    validate(user)
    for a in overrides:
        apply_override(user, a)
    if seed is not None:
        user.setdefault("simulation", {})["seed"] = int(seed)
    if out is not None:
        user.setdefault("io", {})["out"] = str(out)
    validate(user)
    return deep_merge(DEFAULTS, user)


def bivariate_config(cfg):
    s = cfg["simulation"]
    a, sde, p = s["arima"], s["sde"], s["polar"]
    return BivariateConfig(
        n=s["n"], n_nodes=s["n_nodes"], interval=tuple(sde["interval"]),
        arima=ArimaSpec(ar=tuple(a["ar"]), i=a["i"], ma=tuple(a["ma"]), noise_sd=a["noise_sd"],
                        n=s["n"], burn_in=a["burn_in"]),
        mu=sde["mu"], x0=tuple(sde["x0"]), correlated_components=sde["correlated"],
        correlation=sde["correlation"], antithetic=sde["antithetic"], vmf=VmfSpec(s["kappa"]),
        polar=PolarFamily(**p), seed=s["seed"])


def planted_config(cfg):
    s = cfg["simulation"]
    p = s["planted"]
    return PlantedLagConfig(n=s["n"], n_nodes=s["n_nodes"], lags=tuple(p["lags"]),
                            coefs=tuple(p["coefs"]), radius=p["radius"], n_modes=p["n_modes"],
                            decay=p["decay"], noise=p["noise"], rho=p["rho"], seed=s["seed"])


def regression_config(cfg):
    m = cfg["model"]
    return RegressionConfig(
        resolution=m["resolution"], ridge=m["ridge"], rel_cutoff=m["rel_cutoff"],
        kernel_exponent=m["kernel_exponent"], kernel_cutoff=m["kernel_cutoff"],
        submanifold=m["submanifold"], weight_covariance=m["weight_covariance"],
        karcher=KarcherConfig(**m["karcher"]), optimizer=OptimizerConfig(**m["optimizer"]))


def selection_config(cfg, s_star, scenario):
    sel = cfg["selection"]
    times = None
    if sel["window"] is not None:
        times = tuple(range(max(0, s_star - sel["window"]), s_star + 1))
    return SelectionConfig(k_nn=sel["k_nn"], weight_quantile=sel["weight_quantile"],
                           include_s_star=scenario == 2, candidate_times=times)
