"""Experiment configuration: schema-validated parsing, normalization, assembly.

The configuration is one human-readable YAML document with sections
``system``, ``class``, ``sweep``, ``bounds``, ``output`` plus a root ``seed``.
Unknown keys are rejected with their path; parsing normalizes by filling
defaults, after which serialize/parse is idempotent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import yaml

from ._rng import child_seed
from .functions import LinearMap, ScaledTanh, Tabulated1D, ZeroMap
from .spaces import FiniteClass, GLMClass, Lipschitz1D, RKHSBall
from .suites import make_finite_config
from .systems import PointInit, SystemSpec, UniformBallInit, make_random_glm_system, \
    make_random_rkhs_system


class ConfigError(ValueError):
    """Configuration failed validation; the message names the offending key."""


_SCHEMA = {
    "seed": int,
    "system": {
        "kind": str,
        "truth": dict,
        "d_x": int,
        "d_y": int,
        "noise_sigma": float,
        "state_bound": float,
        "noise_truncation": (float, type(None)),
        "burn_in": int,
        "init": dict,
    },
    "class": {
        "type": str,
        "lipschitz": float,
        "value_range": list,
        "bandwidth": float,
        "radius": (float, str),
        "decay_amplitude": float,
        "decay_exponent": float,
        "lambda1": float,
        "link": str,
        "frobenius_bound": float,
        "n_members": int,
        "amplitude": float,
        "offset_lipschitz": float,
    },
    "sweep": {
        "T": list,
        "replicates": int,
        "n_fresh": int,
    },
    "bounds": {
        "c_mix": float,
        "heavy_multiplier": float,
        "parametric_multiplier": float,
        "rkhs_prefactor": float,
        "finite_c1": float,
        "finite_c2": float,
        "gamma": (float, type(None)),
        "delta": (float, type(None)),
        "alpha_trunc": (float, type(None)),
        "sigma_T_sq": (float, str),
    },
    "output": {
        "dir": str,
    },
}

_DEFAULTS = {
    "seed": 0,
    "system": {
        "kind": "autoregressive",
        "truth": {"type": "scaled-tanh", "gain": 0.7},
        "d_x": 1,
        "d_y": 1,
        "noise_sigma": 0.1,
        "state_bound": 1.0,
        "noise_truncation": None,
        "burn_in": 0,
        "init": {"type": "point", "x0": [0.0]},
    },
    "class": {
        "type": "lipschitz-1d",
        "lipschitz": 1.0,
        "value_range": [-1.0, 1.0],
        "bandwidth": 1.0,
        "radius": "auto",
        "decay_amplitude": 1.0,
        "decay_exponent": 1.0,
        "lambda1": 1.0,
        "link": "tanh",
        "frobenius_bound": 1.0,
        "n_members": 16,
        "amplitude": 0.4,
        "offset_lipschitz": 1.0,
    },
    "sweep": {
        "T": [128, 256, 512],
        "replicates": 5,
        "n_fresh": 200,
    },
    "bounds": {
        "c_mix": 1.0,
        "heavy_multiplier": 1.0,
        "parametric_multiplier": 1.0,
        "rkhs_prefactor": 1.0,
        "finite_c1": 1.0,
        "finite_c2": 1.0,
        "gamma": None,
        "delta": None,
        "alpha_trunc": None,
        "sigma_T_sq": "auto",
    },
    "output": {
        "dir": "out",
    },
}


def _check_type(value, expected, path):
    if isinstance(expected, tuple):
        if not any(_type_ok(value, e) for e in expected):
            raise ConfigError(f"{path}: expected one of {expected}, got {type(value).__name__}")
        return _coerce(value, expected[0])
    if not _type_ok(value, expected):
        raise ConfigError(f"{path}: expected {expected.__name__}, got {type(value).__name__}")
    return _coerce(value, expected)


def _type_ok(value, expected):
    if expected is float:
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if expected is int:
        return isinstance(value, int) and not isinstance(value, bool)
    return isinstance(value, expected)


def _coerce(value, expected):
    if expected is float and isinstance(value, int):
        return float(value)
    return value


@dataclass(frozen=True)
class ExperimentConfig:
    """Normalized configuration; ``data`` is the full defaults-filled mapping."""

    data: dict

    @property
    def seed(self) -> int:
        return self.data["seed"]

    def section(self, name: str) -> dict:
        return self.data[name]

    def serialize(self) -> str:
        return yaml.safe_dump(self.data, sort_keys=True, default_flow_style=None)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and normalize a config document, rejecting unknown keys."""
    raw = yaml.safe_load(text)
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a mapping")
    data = {}
    for key, value in raw.items():
        if key not in _SCHEMA:
            raise ConfigError(f"unknown top-level key {key!r}")
        spec = _SCHEMA[key]
        if isinstance(spec, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{key}: expected a mapping")
            section = {}
            for k, v in value.items():
                if k not in spec:
                    raise ConfigError(f"unknown key {key}.{k}")
                section[k] = _check_type(v, spec[k], f"{key}.{k}")
            data[key] = section
        else:
            data[key] = _check_type(value, spec, key)
    # fill defaults
    merged = {}
    for key, default in _DEFAULTS.items():
        if isinstance(default, dict):
            merged[key] = dict(default)
            merged[key].update(data.get(key, {}))
        else:
            merged[key] = data.get(key, default)
    return ExperimentConfig(data=merged)


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def default_config() -> ExperimentConfig:
    return parse_config("")


# ---------------------------------------------------------------------------
# assembly of runtime objects


def _build_truth(truth_cfg: dict, d_x: int, d_y: int, seed: int):
    kind = truth_cfg.get("type")
    if kind == "zero":
        return ZeroMap(d_x, d_y)
    if kind == "linear":
        if "matrix" in truth_cfg:
            return LinearMap(truth_cfg["matrix"])
        return LinearMap(np.eye(d_y, d_x) * float(truth_cfg.get("gain", 0.5)))
    if kind == "scaled-tanh":
        return ScaledTanh(float(truth_cfg.get("gain", 0.7)), d=d_x)
    if kind == "tabulated":
        return Tabulated1D(np.asarray(truth_cfg["x"], float),
                           np.asarray(truth_cfg["y"], float))
    if kind == "rkhs-random":
        spec = make_random_rkhs_system(
            d_x=d_x, k=int(truth_cfg.get("k", 500)),
            rho=float(truth_cfg.get("rho", 0.9)),
            kernel_bandwidth=float(truth_cfg.get("bandwidth", 1.0)),
            seed=child_seed(seed, "config-truth"))
        return spec.truth
    if kind == "glm-random":
        spec = make_random_glm_system(
            d_x=d_x, op_norm=float(truth_cfg.get("op_norm", 0.8)),
            link=truth_cfg.get("link", "tanh"),
            seed=child_seed(seed, "config-truth"))
        return spec.truth
    raise ConfigError(f"system.truth.type: unknown truth type {kind!r}")


def build_system(cfg: ExperimentConfig) -> SystemSpec:
    sec = cfg.section("system")
    d_x, d_y = sec["d_x"], sec["d_y"]
    truth = _build_truth(sec["truth"], d_x, d_y, cfg.seed)
    init_cfg = sec["init"]
    if init_cfg.get("type", "point") == "point":
        init = PointInit(tuple(float(v) for v in init_cfg.get("x0", [0.0])))
    elif init_cfg["type"] == "uniform-ball":
        init = UniformBallInit()
    else:
        raise ConfigError(f"system.init.type: unknown init {init_cfg['type']!r}")
    try:
        return SystemSpec(kind=sec["kind"], truth=truth, d_x=d_x, d_y=d_y,
                          noise_sigma=sec["noise_sigma"],
                          state_bound=sec["state_bound"],
                          noise_truncation=sec["noise_truncation"],
                          init=init, burn_in=sec["burn_in"])
    except ValueError as exc:
        raise ConfigError(f"system: {exc}") from exc


def build_class(cfg: ExperimentConfig, spec: SystemSpec):
    sec = cfg.section("class")
    B = spec.state_bound
    kind = sec["type"]
    if kind == "lipschitz-1d":
        return Lipschitz1D(lipschitz=sec["lipschitz"],
                           value_range=tuple(float(v) for v in sec["value_range"]),
                           domain_bound=B)
    if kind == "rkhs-ball":
        radius = sec["radius"]
        if radius == "auto":
            from .kernels import rbf_kernel
            truth = spec.truth
            if not hasattr(truth, "centers"):
                raise ConfigError("class.radius: 'auto' needs an RBF-expansion truth")
            radius = float(hilbert_norm_of_expansion(truth))
        return RKHSBall(bandwidth=sec["bandwidth"], radius=float(radius),
                        domain_bound=B, decay_amplitude=sec["decay_amplitude"],
                        decay_exponent=sec["decay_exponent"], lambda1=sec["lambda1"])
    if kind == "glm":
        return GLMClass(link=sec["link"], frobenius_bound=sec["frobenius_bound"],
                        d_x=spec.d_x, domain_bound=B)
    if kind == "finite-offsets":
        base = make_finite_config("config", sec["n_members"], spec.noise_sigma,
                                  contraction=0.5, amplitude=sec["amplitude"],
                                  seed=child_seed(cfg.seed, "config-class"),
                                  B=B, offset_lipschitz=sec["offset_lipschitz"])
        return FiniteClass(members=base.members, domain_bound=B)
    raise ConfigError(f"class.type: unknown class type {kind!r}")


def hilbert_norm_of_expansion(expansion, chunk: int = 1000) -> float:
    """Hilbert norm sqrt(sum_j w_j^T K w_j) of an RBF expansion, chunked."""
    from .kernels import rbf_kernel

    C, W = expansion.centers, expansion.weights
    total = 0.0
    for start in range(0, C.shape[0], chunk):
        block = rbf_kernel(C[start:start + chunk], C, expansion.bandwidth)
        total += float(np.sum((block @ W) * W[start:start + chunk]))
    return float(np.sqrt(max(total, 0.0)))
