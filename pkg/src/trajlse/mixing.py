"""Empirical mixing-time estimation for scalar state chains.

The estimator discretizes [-B, B] into equal-width bins, builds a stationary
reference histogram from one long chain, and reports the first lag at which
the worst-case (over a grid of initial bins) histogram total-variation
distance to the reference drops below 1/4.  Exact total-variation mixing
times for finite transition matrices are provided for cross-checks.
"""

from __future__ import annotations

import numpy as np

from ._rng import substream
from .systems import SystemSpec, _project_ball, _truncated_gaussian, UniformBallInit


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Total variation distance between two probability vectors."""
    return 0.5 * float(np.abs(np.asarray(p, float) - np.asarray(q, float)).sum())


def markov_stationary(P: np.ndarray) -> np.ndarray:
    """Stationary distribution of a finite transition matrix (rows sum to 1)."""
    P = np.asarray(P, dtype=float)
    evals, evecs = np.linalg.eig(P.T)
    idx = int(np.argmin(np.abs(evals - 1.0)))
    pi = np.real(evecs[:, idx])
    pi = np.abs(pi)
    return pi / pi.sum()


def markov_mixing_time(P: np.ndarray, threshold: float = 0.25, horizon: int = 10_000) -> int:
    """Exact mixing time of a finite chain: first t with max_x TV(P^t(x,.), pi) <= 1/4."""
    P = np.asarray(P, dtype=float)
    pi = markov_stationary(P)
    Pt = P.copy()
    for t in range(1, horizon + 1):
        worst = max(tv_distance(Pt[i], pi) for i in range(P.shape[0]))
        if worst <= threshold:
            return t
        Pt = Pt @ P
    return horizon + 1


def _step(spec: SystemSpec, x: np.ndarray, w: np.ndarray, cov: np.ndarray | None) -> np.ndarray:
    if spec.kind == "autoregressive":
        return _project_ball(spec.truth._eval(x) + w, spec.state_bound)
    if spec.covariate_map is None:
        return cov
    return _project_ball(spec.covariate_map._eval(x) + cov, spec.state_bound)


def mixing_time_estimate(spec: SystemSpec, n_bins: int = 50, horizon: int = 200,
                         n_chains: int = 400, seed: int = 0,
                         threshold: float = 0.25) -> int:
    """Histogram mixing-time estimate for a 1-D chain.

    Returns ``horizon + 1`` if the threshold is never reached.  Rejects
    multivariate systems; use the contraction-based variance proxy there.
    """
    if spec.d_x != 1:
        raise ValueError("mixing_time_estimate supports d_x = 1 only")
    if n_bins < 2:
        raise ValueError("n_bins must be at least 2")
    B = spec.state_bound
    edges = np.linspace(-B, B, n_bins + 1)

    def hist_rows(states_flat: np.ndarray, n_rows: int) -> np.ndarray:
        # states_flat holds n_rows blocks of equal length; returns (n_rows, n_bins)
        idx = np.clip(np.searchsorted(edges, states_flat, side="right") - 1, 0, n_bins - 1)
        per = states_flat.size // n_rows
        offsets = np.repeat(np.arange(n_rows) * n_bins, per)
        counts = np.bincount(idx + offsets, minlength=n_rows * n_bins)
        return counts.reshape(n_rows, n_bins) / per

    # Stationary reference: one long chain after burn-in.
    ref_len = 100 * horizon
    rng_ref = substream(seed, "mixing", "reference")
    x = spec.init.draw(rng_ref, 1, 1, B)
    total = spec.burn_in + ref_len
    w = _truncated_gaussian(rng_ref, (total, 1, 1), spec.noise_sigma, spec.noise_radius)
    cov = None
    if spec.kind == "time-series":
        cov = UniformBallInit().draw(rng_ref, total, 1, B).reshape(total, 1, 1)
    ref_states = np.empty(ref_len)
    for t in range(total):
        if t >= spec.burn_in:
            ref_states[t - spec.burn_in] = x[0, 0]
        x = _step(spec, x, w[t], cov[t] if cov is not None else None)
    ref_hist = hist_rows(ref_states, 1)[0]

    # Chains started at every bin center.
    centers = 0.5 * (edges[:-1] + edges[1:])
    starts = np.repeat(centers, n_chains).reshape(-1, 1)
    n_total = starts.shape[0]
    rng = substream(seed, "mixing", "chains")
    w = _truncated_gaussian(rng, (horizon, n_total, 1), spec.noise_sigma, spec.noise_radius)
    cov = None
    if spec.kind == "time-series":
        cov = UniformBallInit().draw(rng, horizon * n_total, 1, B).reshape(horizon, n_total, 1)
    x = starts
    for t in range(1, horizon + 1):
        x = _step(spec, x, w[t - 1], cov[t - 1] if cov is not None else None)
        hists = hist_rows(x[:, 0], n_bins)
        worst = 0.5 * np.abs(hists - ref_hist).sum(axis=1).max()
        if worst <= threshold:
            return t
    return horizon + 1
