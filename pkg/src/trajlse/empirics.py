"""Monte-Carlo estimation of errors, variance proxies and process inequalities.

All estimators here are seeded and pure: identical inputs give identical
outputs, replicates live on named substreams, and every in-expectation
inequality check uses the same statistical slack convention (three standard
errors) rather than per-test tuning.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ._rng import substream
from .functions import evaluate
from .systems import SystemSpec, counterfactual_points, simulate_batch


def simulate_replicates(spec: SystemSpec, T: int, n_rep: int, seed: int):
    """Independent replicate trajectories on streams ("rep", i); returns arrays.

    Shapes: states (T, n_rep, d_x), outputs and noises (T, n_rep, d_y).
    """
    labels = [("rep", i) for i in range(n_rep)]
    return simulate_batch(spec, T, seed, labels)


def _eval_on_batch(fn, states: np.ndarray, d_out: int) -> np.ndarray:
    """Evaluate a map on a (T, n, d_x) state array, returning (T, n, d_out)."""
    T, n, d_x = states.shape
    flat = evaluate(fn, states.reshape(T * n, d_x), d_x)
    return flat.reshape(T, n, d_out)


def counterfactual_error(model, spec: SystemSpec, T: int, n_fresh: int, seed: int,
                         truth=None):
    """Mean Euclidean distance between model and truth at fresh mixture points.

    Draws ``n_fresh`` independent fresh trajectories with uniform time indices
    and averages ||model(x'_tau) - truth(x'_tau)||_2; the standard error is the
    sample standard deviation over draws divided by sqrt(n_fresh).
    """
    if n_fresh < 2:
        raise ValueError("n_fresh must be at least 2")
    truth = spec.truth if truth is None else truth
    points = counterfactual_points(spec, T, n_fresh, seed)
    diff = evaluate(model, points, spec.d_x) - evaluate(truth, points, spec.d_x)
    dist = np.linalg.norm(diff, axis=1)
    return float(dist.mean()), float(dist.std(ddof=1) / math.sqrt(n_fresh))


@dataclass(frozen=True)
class SigmaEstimate:
    """Empirical variance proxy with a bootstrap confidence interval."""

    value: float
    ci_low: float
    ci_high: float
    per_pair: np.ndarray
    dropped_lambdas: tuple


def _logmgf_proxy(F: np.ndarray, lambdas: np.ndarray):
    """max over lambda of 2 log E exp(lambda (F - mean F)) / lambda^2."""
    centered = F - F.mean()
    best = 0.0
    dropped = []
    for lam in lambdas:
        if lam == 0.0:
            continue
        expo = lam * centered
        if np.max(expo) > 700.0:
            dropped.append(float(lam))
            continue
        m = float(np.mean(np.exp(expo)))
        if m <= 0.0 or not math.isfinite(m):
            dropped.append(float(lam))
            continue
        best = max(best, 2.0 * math.log(m) / lam**2)
    return best, dropped


def estimate_sigma_T(pairs, spec: SystemSpec, T: int, n_rep: int, lambda_grid,
                     seed: int, n_boot: int = 200) -> SigmaEstimate:
    """Empirical subgaussian proxy of F = (1/T) sum_t ||f(x_t) - g(x_t)||_2.

    For each supplied pair (f, g) the log-MGF of the centered statistic is
    maximized over the lambda grid; the estimate is the maximum over pairs.
    Lambdas whose empirical MGF overflows are dropped with a warning.  The
    confidence interval is a percentile bootstrap over replicates.
    """
    if n_rep < 100:
        raise ValueError("n_rep must be at least 100")
    lambdas = np.asarray(sorted(lambda_grid), dtype=float)
    if lambdas.size == 0:
        raise ValueError("lambda_grid must be nonempty")
    if not np.allclose(lambdas, -lambdas[::-1], atol=1e-12):
        raise ValueError("lambda_grid must be symmetric around zero")

    states, _, _ = simulate_replicates(spec, T, n_rep, seed)
    F_rows = []
    for f, g in pairs:
        fv = _eval_on_batch(f, states, spec.d_y)
        gv = _eval_on_batch(g, states, spec.d_y)
        F_rows.append(np.linalg.norm(fv - gv, axis=2).mean(axis=0))
    F_rows = np.asarray(F_rows)            # (n_pairs, n_rep)

    per_pair = np.empty(len(F_rows))
    dropped = []
    for i, F in enumerate(F_rows):
        per_pair[i], drop = _logmgf_proxy(F, lambdas)
        dropped.extend(drop)
    if dropped:
        warnings.warn(f"dropped {len(dropped)} lambda values with MGF overflow; "
                      "the grid should respect the boundedness scale of F")
    value = float(per_pair.max())

    rng = substream(seed, "sigma-boot")
    boot = np.empty(n_boot)
    for b in range(n_boot):
        idx = rng.integers(0, n_rep, size=n_rep)
        boot[b] = max(_logmgf_proxy(F[idx], lambdas)[0] for F in F_rows)
    lo, hi = np.percentile(boot, [2.5, 97.5])
    return SigmaEstimate(value=value, ci_low=float(lo), ci_high=float(hi),
                         per_pair=per_pair, dropped_lambdas=tuple(sorted(set(dropped))))


@dataclass(frozen=True)
class OffsetProcessSample:
    """Per-member values of the offset process over replicate trajectories."""

    values: np.ndarray   # (n_members, n_rep)
    sup: np.ndarray      # (n_rep,)


def offset_process(shifted_members, states: np.ndarray, noises: np.ndarray) -> OffsetProcessSample:
    """M(f) = sum_t [4 <w_t, f(x_t)> - ||f(x_t)||^2] for each shifted member.

    Uses the stored noises of the trajectories, so the values are exact.
    """
    d_y = noises.shape[2]
    rows = []
    for f in shifted_members:
        fv = _eval_on_batch(f, states, d_y)
        rows.append(np.sum(4.0 * np.sum(noises * fv, axis=2)
                           - np.sum(fv**2, axis=2), axis=0))
    values = np.asarray(rows)
    return OffsetProcessSample(values=values, sup=values.max(axis=0))


def mgf_lambda_cap(sigma_w: float) -> float:
    """Upper end of the stated tilt range, 1/(2 sigma_w^2)."""
    return math.inf if sigma_w == 0 else 1.0 / (2.0 * sigma_w**2)


def mgf_check(shifted_fn, spec: SystemSpec, T: int, lam: float, n_rep: int, seed: int):
    """Monte-Carlo estimate of E exp(lam * M(f)) for one shifted member.

    Requires 0 <= lam <= 1/(2 sigma_w^2).  Returns (estimate, standard error);
    lam = 0 gives exactly (1, 0).
    """
    if lam < 0 or lam > mgf_lambda_cap(spec.noise_sigma):
        raise ValueError("lam must lie in [0, 1/(2 sigma_w^2)]")
    if lam == 0.0:
        return 1.0, 0.0
    states, _, noises = simulate_replicates(spec, T, n_rep, seed)
    sample = offset_process([shifted_fn], states, noises)
    vals = np.exp(lam * sample.values[0])
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_rep))


def _check_truth_in_class(members, spec: SystemSpec, atol: float = 1e-9):
    probe = np.linspace(-spec.state_bound, spec.state_bound, 65)
    if spec.d_x > 1:
        probe = np.tile(probe.reshape(-1, 1), (1, spec.d_x))
    tv = evaluate(spec.truth, probe, spec.d_x)
    for f in members:
        if np.max(np.abs(evaluate(f, probe, spec.d_x) - tv)) <= atol:
            return
    raise ValueError("the class must contain the truth")


def offset_supremum(members, spec: SystemSpec, T: int, n_rep: int, seed: int):
    """Monte-Carlo mean of sup over the shifted class of the offset process.

    ``members`` is the finite hypothesis class (the truth must belong to it);
    the supremum runs over the shifted members f - truth.  Returns
    (estimate, standard error, OffsetProcessSample).
    """
    _check_truth_in_class(members, spec)
    states, _, noises = simulate_replicates(spec, T, n_rep, seed)
    truth_vals = _eval_on_batch(spec.truth, states, spec.d_y)
    d_y = spec.d_y
    rows = []
    for f in members:
        fv = _eval_on_batch(f, states, d_y) - truth_vals
        rows.append(np.sum(4.0 * np.sum(noises * fv, axis=2)
                           - np.sum(fv**2, axis=2), axis=0))
    values = np.asarray(rows)
    sup = values.max(axis=0)
    sample = OffsetProcessSample(values=values, sup=sup)
    return float(sup.mean()), float(sup.std(ddof=1) / math.sqrt(n_rep)), sample


def plug_in_entropy(indices: np.ndarray, n_support: int) -> float:
    """Miller-Madow-corrected plug-in Shannon entropy of an index sample."""
    n = indices.size
    counts = np.bincount(indices, minlength=n_support)
    p = counts[counts > 0] / n
    h = float(-(p * np.log(p)).sum())
    return h + (len(p) - 1) / (2.0 * n)


@dataclass(frozen=True)
class DecouplingReport:
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    train_term: float
    info_term: float
    entropy: float
    sigma_T_sq: float
    passed: bool


def decoupling_check(members, spec: SystemSpec, T: int, n_rep: int, n_fresh: int,
                     seed: int, sigma_T_sq: float) -> DecouplingReport:
    """Check the information-theoretic decoupling inequality on a finite class.

    Per replicate: fit the exhaustive finite-class least squares on a fresh
    training trajectory, evaluate it at fresh mixture points (left side) and
    on its own training states (right side).  The information term uses the
    plug-in entropy of the fitted-index distribution, which upper-bounds the
    mutual information between estimate and sample, and the supplied variance
    proxy ``sigma_T_sq``.  Passes iff lhs <= rhs + 3 * combined standard error.
    """
    if n_rep < 200:
        raise ValueError("n_rep must be at least 200")
    _check_truth_in_class(members, spec)
    n_members = len(members)

    states, outputs, _ = simulate_replicates(spec, T, n_rep, seed)
    truth_vals = _eval_on_batch(spec.truth, states, spec.d_y)
    objectives = np.empty((n_members, n_rep))
    train_dist = np.empty((n_members, n_rep))
    for j, f in enumerate(members):
        fv = _eval_on_batch(f, states, spec.d_y)
        objectives[j] = np.mean(np.sum((outputs - fv) ** 2, axis=2), axis=0)
        train_dist[j] = np.mean(np.sum((fv - truth_vals) ** 2, axis=2), axis=0)
    best = np.argmin(objectives, axis=0)        # first minimizer on ties
    train_mse = train_dist[best, np.arange(n_rep)]

    # fresh evaluation points, one batch of n_fresh per replicate
    labels = [("rep", i, "fresh", j) for i in range(n_rep) for j in range(n_fresh)]
    fresh_states, _, _ = simulate_batch(spec, T, seed, labels)
    taus = substream(seed, "decoupling-tau").integers(0, T, size=len(labels))
    points = fresh_states[taus, np.arange(len(labels)), :]
    truth_pts = evaluate(spec.truth, points, spec.d_x)
    dists = np.empty((n_members, len(labels)))
    for j, f in enumerate(members):
        dists[j] = np.linalg.norm(evaluate(f, points, spec.d_x) - truth_pts, axis=1)
    chosen = np.repeat(best, n_fresh)
    per_rep = dists[chosen, np.arange(len(labels))].reshape(n_rep, n_fresh).mean(axis=1)

    lhs = float(per_rep.mean())
    lhs_se = float(per_rep.std(ddof=1) / math.sqrt(n_rep))
    mean_mse = float(train_mse.mean())
    mse_se = float(train_mse.std(ddof=1) / math.sqrt(n_rep))
    train_term = math.sqrt(mean_mse)
    train_term_se = mse_se / (2.0 * math.sqrt(mean_mse)) if mean_mse > 0 else 0.0
    entropy = plug_in_entropy(best, n_members)
    info_term = math.sqrt(2.0 * sigma_T_sq * entropy)
    rhs = train_term + info_term
    combined = math.sqrt(lhs_se**2 + train_term_se**2)
    return DecouplingReport(lhs=lhs, lhs_se=lhs_se, rhs=rhs, rhs_se=train_term_se,
                            train_term=train_term, info_term=info_term,
                            entropy=entropy, sigma_T_sq=sigma_T_sq,
                            passed=lhs <= rhs + 3.0 * combined)


@dataclass(frozen=True)
class RateFit:
    """Ordinary least squares slope of log(error) against log(T)."""

    slope: float
    intercept: float
    ci_low: float
    ci_high: float
    stderr: float


def fit_rate(rows) -> RateFit:
    """Fit a power law to (T, error) pairs on log-log axes with a 95% CI."""
    rows = list(rows)
    if len(rows) < 3:
        raise ValueError("need at least 3 rows")
    T = np.array([r[0] for r in rows], dtype=float)
    err = np.array([r[1] for r in rows], dtype=float)
    bad = np.where(err <= 0)[0]
    if bad.size:
        raise ValueError(f"errors must be positive; offending row indices: {bad.tolist()}")
    if np.unique(T).size < 3:
        raise ValueError("need at least 3 distinct T values")
    x = np.log(T)
    y = np.log(err)
    n = x.size
    xbar = x.mean()
    sxx = np.sum((x - xbar) ** 2)
    slope = float(np.sum((x - xbar) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * xbar)
    resid = y - (intercept + slope * x)
    dof = n - 2
    s2 = float(np.sum(resid**2) / dof) if dof > 0 else 0.0
    stderr = math.sqrt(s2 / sxx)
    tq = float(stats.t.ppf(0.975, dof)) if dof > 0 else math.inf
    return RateFit(slope=slope, intercept=intercept, ci_low=slope - tq * stderr,
                   ci_high=slope + tq * stderr, stderr=stderr)
