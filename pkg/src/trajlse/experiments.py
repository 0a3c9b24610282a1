"""Experiment drivers: rate sweeps over the horizon grid and the radial-basis
random-system reproduction, with deterministic seeding and ordered reduction.

Replicates fan out to a thread pool; every cell is a pure function of
(config, seed), and results are assembled in (T, replicate) order so output
bytes do not depend on the thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from ._rng import child_seed
from .bounds import (BoundInputs, balance, heavy_rate, master_bound,
                     nonparametric_rate, parametric_rate, sigma_contraction)
from .config import ExperimentConfig, build_class, build_system, hilbert_norm_of_expansion
from .empirics import RateFit, counterfactual_error, fit_rate
from .estimators import fit_least_squares
from .functions import Tabulated1D
from .spaces import (FiniteClass, GLMClass, Lipschitz1D, LogLinearEntropy,
                     PowerLawEntropy, RKHSBall)
from .systems import contraction_estimate, make_random_rkhs_system, simulate

REPORT_COLUMNS = ["suite", "T", "replicate", "seed", "error", "se",
                  "bound_master", "bound_rate", "sigma_T_emp", "sigma_T_bound"]


@dataclass(frozen=True)
class SweepReport:
    rows: list
    rate: RateFit | None

    def footer(self) -> list:
        if self.rate is None:
            return ["slope: nan", "slope_ci_low: nan", "slope_ci_high: nan",
                    "intercept: nan"]
        return [f"slope: {self.rate.slope!r}",
                f"slope_ci_low: {self.rate.ci_low!r}",
                f"slope_ci_high: {self.rate.ci_high!r}",
                f"intercept: {self.rate.intercept!r}"]


def _class_lipschitz(hyp, spec, seed) -> float | None:
    if isinstance(hyp, Lipschitz1D):
        return hyp.lipschitz
    if isinstance(hyp, GLMClass):
        return hyp.frobenius_bound  # 1-Lipschitz link: Lip <= ||A||_2 <= ||A||_F
    if isinstance(hyp, RKHSBall):
        return hyp.radius / hyp.bandwidth
    if isinstance(hyp, FiniteClass):
        lips = []
        for m in hyp.members:
            if isinstance(m, Tabulated1D):
                lips.append(m.lipschitz_constant())
            else:
                lips.append(contraction_estimate(m, spec.state_bound, 2000,
                                                 child_seed(seed, "class-lip")))
        return max(lips)
    return None


def _sigma_bound(cfg: ExperimentConfig, hyp, spec, T: int) -> float:
    setting = cfg.section("bounds")["sigma_T_sq"]
    if setting != "auto":
        return float(setting)
    L = _class_lipschitz(hyp, spec, cfg.seed)
    L_star = contraction_estimate(spec.truth, spec.state_bound, 4096,
                                  child_seed(cfg.seed, "truth-contraction"))
    if L is None or L_star >= 1.0:
        return math.nan
    return sigma_contraction(M=1.0, m=1.0, B=spec.state_bound, L=L,
                             L_star=L_star, T=T).value


def _entropy_model(cfg: ExperimentConfig, hyp):
    if isinstance(hyp, RKHSBall):
        return hyp.entropy_model(prefactor=cfg.section("bounds")["rkhs_prefactor"])
    return hyp.entropy_model()


def _bounds_for_T(cfg: ExperimentConfig, hyp, spec, T: int):
    bounds_cfg = cfg.section("bounds")
    sigma_sq = _sigma_bound(cfg, hyp, spec, T)
    if math.isnan(sigma_sq):
        return math.nan, math.nan, math.nan
    model = _entropy_model(cfg, hyp)
    overrides = (bounds_cfg["gamma"], bounds_cfg["delta"], bounds_cfg["alpha_trunc"])
    if all(v is not None for v in overrides):
        gamma, delta, alpha = overrides
        bound_master = master_bound(BoundInputs(
            sigma_w=spec.noise_sigma, T=T, d_y=spec.d_y, entropy=model,
            sigma_T_sq=sigma_sq, gamma=gamma, delta=delta, alpha_trunc=alpha))
    else:
        bound_master = balance(model, spec.noise_sigma, T, spec.d_y, sigma_sq).value
    if isinstance(model, PowerLawEntropy):
        if model.q < 2:
            bound_rate = nonparametric_rate(model.p, model.q, spec.noise_sigma, T,
                                            sigma_sq, d_y=spec.d_y).exact
        else:
            bound_rate = heavy_rate(model.p, model.q, spec.noise_sigma, T, spec.d_y,
                                    sigma_sq, bounds_cfg["heavy_multiplier"])
    elif isinstance(model, LogLinearEntropy):
        bound_rate = parametric_rate(model.p, model.c, spec.noise_sigma, T, spec.d_y,
                                     sigma_sq, bounds_cfg["parametric_multiplier"])
    else:
        bound_rate = math.nan
    return bound_master, bound_rate, sigma_sq


def rate_sweep(cfg: ExperimentConfig, seed: int | None = None,
               threads: int = 1) -> SweepReport:
    """Train/evaluate over the (T, replicate) grid and fit the log-log slope."""
    seed = cfg.seed if seed is None else seed
    spec = build_system(cfg)
    hyp = build_class(cfg, spec)
    sweep = cfg.section("sweep")
    horizons = list(sweep["T"])
    n_rep = sweep["replicates"]
    n_fresh = sweep["n_fresh"]

    per_T = {T: _bounds_for_T(cfg, hyp, spec, T) for T in horizons}

    def cell(args):
        T, r = args
        traj = simulate(spec, T, child_seed(seed, "train", T, r))
        est = fit_least_squares(hyp, traj)
        err, se = counterfactual_error(est, spec, T, n_fresh,
                                       child_seed(seed, "eval", T, r))
        bound_master, bound_rate, sigma_sq = per_T[T]
        return ["rate-sweep", T, r, seed, err, se, bound_master, bound_rate,
                math.nan, sigma_sq]

    cells = [(T, r) for T in horizons for r in range(n_rep)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(cell, cells))
    else:
        rows = [cell(c) for c in cells]
    rate = None
    if len(set(horizons)) >= 3 and all(row[4] > 0 for row in rows):
        rate = fit_rate([(row[1], row[4]) for row in rows])
    return SweepReport(rows=rows, rate=rate)


@dataclass(frozen=True)
class D2Preset:
    """Parameters of the random radial-basis system reproduction."""

    name: str
    k: int
    d_x: int
    rho: float
    n_systems: int
    n_fresh: int
    horizons: tuple
    burn_in: int
    noise_sigma: float
    state_bound: float
    bandwidth: float = 1.0


D2_PRESETS = {
    "paper": D2Preset(name="paper", k=10_000, d_x=5, rho=0.9, n_systems=10,
                      n_fresh=1000, horizons=(50, 100, 200, 350, 500),
                      burn_in=1000, noise_sigma=0.1, state_bound=30.0),
    "reduced": D2Preset(name="reduced", k=500, d_x=3, rho=0.9, n_systems=5,
                        n_fresh=200, horizons=(50, 100, 200, 350, 500),
                        burn_in=1000, noise_sigma=0.1, state_bound=30.0),
}


def reproduce_d2(preset: D2Preset | str = "paper", seed: int = 0,
                 threads: int = 1) -> SweepReport:
    """Kernel ridge learning of random radial-basis systems over the T grid.

    Each system draws its own truth; the hypothesis ball radius is set to the
    truth's Hilbert norm.  Rows are ordered by (T, system).
    """
    if isinstance(preset, str):
        try:
            preset = D2_PRESETS[preset]
        except KeyError:
            raise ValueError(f"unknown preset {preset!r}; "
                             f"available: {sorted(D2_PRESETS)}") from None

    from .estimators import KernelRidgeBallLSE

    systems = []
    for s in range(preset.n_systems):
        spec = make_random_rkhs_system(preset.d_x, preset.k, preset.rho,
                                       preset.bandwidth,
                                       seed=child_seed(seed, "system", s),
                                       noise_sigma=preset.noise_sigma,
                                       state_bound=preset.state_bound,
                                       burn_in=preset.burn_in)
        systems.append((spec, hilbert_norm_of_expansion(spec.truth)))

    def cell(args):
        T, s = args
        spec, radius = systems[s]
        traj = simulate(spec, T, child_seed(seed, "train", s, T))
        est = KernelRidgeBallLSE(bandwidth=preset.bandwidth, radius=radius)
        est.fit(traj.states, traj.outputs)
        err, se = counterfactual_error(est, spec, T, preset.n_fresh,
                                       child_seed(seed, "eval", s, T))
        return ["reproduce-d2", T, s, seed, err, se, math.nan, math.nan,
                math.nan, math.nan]

    cells = [(T, s) for T in preset.horizons for s in range(preset.n_systems)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(cell, cells))
    else:
        rows = [cell(c) for c in cells]
    rate = fit_rate([(row[1], row[4]) for row in rows])
    return SweepReport(rows=rows, rate=rate)
