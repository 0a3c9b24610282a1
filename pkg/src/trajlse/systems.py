"""Data-generating processes: specification, simulation, counterfactual draws.

Two kinds of process are supported.  In the autoregressive kind the recorded
output is the pre-projection next state,

    y_t = f(x_t) + w_t,        x_{t+1} = proj_B(y_t),

and in the time-series kind the covariates evolve on their own chain while
y_t = f(x_t) + w_t is a separate measurement.  Noise is an isotropic Gaussian
draw conditioned on ||w|| <= R_w (default R_w = 4 sigma_w), which keeps it
mean zero and sigma_w^2-subgaussian while guaranteeing bounded states after
projection onto the ball of radius B.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ._rng import substream
from .functions import RBFExpansion, GLMMap, VectorMap, as_points, evaluate


@dataclass(frozen=True)
class PointInit:
    """Deterministic initial state (projected onto the state ball if outside)."""

    x0: tuple = (0.0,)

    def draw(self, rng, n: int, d: int, bound: float) -> np.ndarray:
        x0 = np.asarray(self.x0, dtype=float).reshape(-1)
        if x0.size == 1 and d > 1:
            x0 = np.full(d, x0[0])
        if x0.size != d:
            raise ValueError(f"init state has dimension {x0.size}, expected {d}")
        return _project_ball(np.tile(x0, (n, 1)), bound)


@dataclass(frozen=True)
class UniformBallInit:
    """Uniform draw from the ball of radius ``bound``."""

    def draw(self, rng, n: int, d: int, bound: float) -> np.ndarray:
        direction = rng.standard_normal((n, d))
        norms = np.linalg.norm(direction, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        radius = bound * rng.uniform(0.0, 1.0, size=(n, 1)) ** (1.0 / d)
        return direction / norms * radius


@dataclass(frozen=True)
class SystemSpec:
    """Full description of a data-generating process."""

    kind: str                      # "autoregressive" | "time-series"
    truth: VectorMap
    d_x: int
    d_y: int
    noise_sigma: float
    state_bound: float
    noise_truncation: float | None = None   # defaults to 4 * noise_sigma
    init: PointInit | UniformBallInit = field(default_factory=PointInit)
    burn_in: int = 0
    covariate_map: VectorMap | None = None  # time-series only; None -> i.i.d. uniform ball

    def __post_init__(self):
        if self.kind not in ("autoregressive", "time-series"):
            raise ValueError(f"unknown system kind {self.kind!r}")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        if self.state_bound <= 0:
            raise ValueError("state_bound must be positive")
        if self.d_x < 1 or self.d_y < 1:
            raise ValueError("dimensions must be positive")
        if self.kind == "autoregressive" and self.d_x != self.d_y:
            raise ValueError("autoregressive systems require d_y == d_x")
        if self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")
        if self.noise_truncation is not None and self.noise_truncation <= 0:
            raise ValueError("noise_truncation must be positive")
        if self.truth.d_in != self.d_x or self.truth.d_out != self.d_y:
            raise ValueError("truth dimensions do not match the spec")

    @property
    def noise_radius(self) -> float:
        if self.noise_truncation is not None:
            return self.noise_truncation
        return 4.0 * self.noise_sigma

    def with_truth(self, truth: VectorMap) -> "SystemSpec":
        return replace(self, truth=truth)


@dataclass(frozen=True)
class Trajectory:
    """One realization of a system: states, outputs and the noises that made it."""

    states: np.ndarray    # (T, d_x)
    outputs: np.ndarray   # (T, d_y)
    noises: np.ndarray    # (T, d_y)
    seed: int

    def __post_init__(self):
        for name in ("states", "outputs", "noises"):
            arr = getattr(self, name)
            if arr.ndim != 2:
                raise ValueError(f"{name} must be a 2-D array")
            arr.flags.writeable = False
        if not (len(self.states) == len(self.outputs) == len(self.noises)):
            raise ValueError("states, outputs and noises must share the horizon")

    @property
    def horizon(self) -> int:
        return self.states.shape[0]


def _project_ball(x: np.ndarray, bound: float) -> np.ndarray:
    norms = np.linalg.norm(x, axis=-1, keepdims=True)
    scale = np.minimum(1.0, bound / np.maximum(norms, 1e-300))
    return x * scale


def _truncated_gaussian(rng, shape, sigma: float, radius: float) -> np.ndarray:
    """Gaussian N(0, sigma^2 I) conditioned on the event ||w||_2 <= radius."""
    if sigma == 0.0:
        return np.zeros(shape)
    w = rng.normal(0.0, sigma, size=shape)
    bad = np.linalg.norm(w, axis=-1) > radius
    while bad.any():
        w[bad] = rng.normal(0.0, sigma, size=(int(bad.sum()), shape[-1]))
        bad = np.linalg.norm(w, axis=-1) > radius
    return w


def _simulate_arrays(spec: SystemSpec, T: int, seed: int, chain_labels):
    """Simulate len(chain_labels) chains; returns (states, outputs, noises).

    Shapes are (T, n, d_x) / (T, n, d_y) / (T, n, d_y).  Chain j draws all its
    randomness from substreams named by ``chain_labels[j]``, so any chain can
    be reproduced alone and adding chains never perturbs existing ones.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    n = len(chain_labels)
    d_x, d_y = spec.d_x, spec.d_y
    total = spec.burn_in + T
    radius = spec.noise_radius

    noises = np.empty((total, n, d_y))
    x0 = np.empty((n, d_x))
    cov_draws = None
    if spec.kind == "time-series":
        cov_draws = np.empty((total, n, d_x))
    for j, labels in enumerate(chain_labels):
        rng_noise = substream(seed, *labels, "noise")
        noises[:, j, :] = _truncated_gaussian(rng_noise, (total, d_y), spec.noise_sigma, radius)
        rng_init = substream(seed, *labels, "init")
        x0[j] = spec.init.draw(rng_init, 1, d_x, spec.state_bound)[0]
        if spec.kind == "time-series":
            rng_cov = substream(seed, *labels, "covariate")
            if spec.covariate_map is None:
                cov_draws[:, j, :] = UniformBallInit().draw(rng_cov, total, d_x, spec.state_bound)
            else:
                cov_draws[:, j, :] = _truncated_gaussian(
                    rng_cov, (total, d_x), spec.noise_sigma, radius)

    states = np.empty((T, n, d_x))
    outputs = np.empty((T, n, d_y))
    x = x0
    truth = spec.truth
    for t in range(total):
        rec = t - spec.burn_in
        if spec.kind == "autoregressive":
            y = truth._eval(x) + noises[t]
            x_next = _project_ball(y, spec.state_bound)
        else:
            if rec >= 0:
                y = truth._eval(x) + noises[t]
            if spec.covariate_map is None:
                x_next = cov_draws[t]
            else:
                x_next = _project_ball(spec.covariate_map._eval(x) + cov_draws[t],
                                       spec.state_bound)
        if rec >= 0:
            states[rec] = x
            outputs[rec] = y
        x = x_next
    return states, outputs, noises[spec.burn_in:]


def simulate(spec: SystemSpec, T: int, seed: int, _labels=()) -> Trajectory:
    """Generate one trajectory of length T, deterministic in (spec, T, seed)."""
    states, outputs, noises = _simulate_arrays(spec, T, seed, [tuple(_labels)])
    return Trajectory(states[:, 0, :], outputs[:, 0, :], noises[:, 0, :], seed=seed)


def simulate_batch(spec: SystemSpec, T: int, seed: int, chain_labels):
    """Vectorized multi-chain simulation; see ``_simulate_arrays`` for shapes."""
    return _simulate_arrays(spec, T, seed, [tuple(lab) for lab in chain_labels])


def sample_counterfactual(spec: SystemSpec, T: int, n_fresh: int, seed: int):
    """Fresh trajectories paired with uniform time indices.

    Realizes the evaluation distribution: each sample is an independent fresh
    trajectory x' together with tau uniform on {0, ..., T-1}; the evaluation
    point is x'_tau.  Randomness lives on "fresh"/"tau" streams, independent
    of any training stream under the same seed.
    """
    if n_fresh < 1:
        raise ValueError("n_fresh must be at least 1")
    labels = [("fresh", j) for j in range(n_fresh)]
    states, outputs, noises = _simulate_arrays(spec, T, seed, labels)
    taus = substream(seed, "tau").integers(0, T, size=n_fresh)
    out = []
    for j in range(n_fresh):
        traj = Trajectory(states[:, j, :].copy(), outputs[:, j, :].copy(),
                          noises[:, j, :].copy(), seed=seed)
        out.append((traj, int(taus[j])))
    return out


def counterfactual_points(spec: SystemSpec, T: int, n_fresh: int, seed: int) -> np.ndarray:
    """The evaluation points x'_tau of ``sample_counterfactual``, as (n, d_x).

    Identical draws to ``sample_counterfactual`` without materializing the
    trajectory objects; used on the hot path of Monte-Carlo experiments.
    """
    if n_fresh < 1:
        raise ValueError("n_fresh must be at least 1")
    labels = [("fresh", j) for j in range(n_fresh)]
    states, _, _ = _simulate_arrays(spec, T, seed, labels)
    taus = substream(seed, "tau").integers(0, T, size=n_fresh)
    return states[taus, np.arange(n_fresh), :]


def make_random_rkhs_system(d_x: int, k: int, rho: float, kernel_bandwidth: float = 1.0,
                            seed: int = 0, noise_sigma: float = 0.1,
                            state_bound: float = 30.0, burn_in: int = 1000) -> SystemSpec:
    """Random radial-basis expansion truth with operator-norm-controlled gain.

    Draws k centers and a k x d_x coefficient matrix with standard normal
    entries, rescales the coefficients so their operator norm equals rho, and
    returns the autoregressive system driven by f(x) = W^T k(x).  For rho < 1
    the map is rho-contractive (kernel slopes are below one at unit
    bandwidth, and empirically the pairwise ratio stays well under rho).
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    centers = substream(seed, "rkhs", "centers").standard_normal((k, d_x))
    theta = substream(seed, "rkhs", "weights").standard_normal((k, d_x))
    if rho == 0.0:
        weights = np.zeros_like(theta)
    else:
        weights = rho * theta / np.linalg.norm(theta, 2)
    truth = RBFExpansion(centers, weights, kernel_bandwidth)
    return SystemSpec(kind="autoregressive", truth=truth, d_x=d_x, d_y=d_x,
                      noise_sigma=noise_sigma, state_bound=state_bound,
                      burn_in=burn_in)


def make_random_glm_system(d_x: int, op_norm: float, link: str = "tanh", seed: int = 0,
                           noise_sigma: float = 0.1, state_bound: float = 1.0,
                           burn_in: int = 0) -> SystemSpec:
    """Random f(x) = phi(A x) with the operator norm of A set exactly."""
    G = substream(seed, "glm", "matrix").standard_normal((d_x, d_x))
    A = op_norm * G / np.linalg.norm(G, 2)
    truth = GLMMap(A, link)
    return SystemSpec(kind="autoregressive", truth=truth, d_x=d_x, d_y=d_x,
                      noise_sigma=noise_sigma, state_bound=state_bound,
                      burn_in=burn_in)


def contraction_estimate(truth, bound: float, n_pairs: int, seed: int,
                         d_x: int | None = None) -> float:
    """Empirical Lipschitz lower bound from sampled pairs in the state ball."""
    if n_pairs < 1:
        raise ValueError("n_pairs must be at least 1")
    d = d_x if d_x is not None else truth.d_in
    rng = substream(seed, "contraction")
    init = UniformBallInit()
    x = init.draw(rng, n_pairs, d, bound)
    z = init.draw(rng, n_pairs, d, bound)
    gap = np.linalg.norm(x - z, axis=1)
    degenerate = gap < 1e-12
    while degenerate.any():
        z[degenerate] = init.draw(rng, int(degenerate.sum()), d, bound)
        gap = np.linalg.norm(x - z, axis=1)
        degenerate = gap < 1e-12
    fx = evaluate(truth, x, d)
    fz = evaluate(truth, z, d)
    return float(np.max(np.linalg.norm(fx - fz, axis=1) / gap))
