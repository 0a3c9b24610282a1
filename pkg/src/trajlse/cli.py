"""Command-line harness: simulate | fit | eval | bounds | rate-sweep | verify | reproduce-d2.

Each subcommand reads a YAML config (flags override), writes CSV artifacts
with the effective config echoed in '#' header lines, and exits nonzero with
a one-line reason on validation or suite failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from ._rng import child_seed
from .bounds import (BoundInputs, EntropyDivergenceError, balance, heavy_rate,
                     master_bound_terms, nonparametric_rate, parametric_rate)
from .config import ConfigError, default_config, load_config
from .empirics import counterfactual_error
from .estimators import fit_least_squares, training_error
from .experiments import (D2_PRESETS, REPORT_COLUMNS, rate_sweep, reproduce_d2)
from .model_io import ModelArtifactError, load_model, save_model
from .reporting import config_comments, write_csv
from .spaces import LogLinearEntropy, PowerLawEntropy
from .suites import standard_verification_suite
from .systems import simulate


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trajlse",
        description="Single-trajectory least squares learning of nonlinear "
                    "dynamics, with evaluable error bounds and verification suites.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_T=False, with_model=False, with_preset=False):
        p.add_argument("--config", type=Path, default=None, help="YAML config path")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--threads", type=int, default=1, help="worker threads")
        p.add_argument("--out", type=Path, default=None, help="output directory")
        if with_T:
            p.add_argument("--T", type=int, default=None,
                           help="horizon (default: first sweep entry)")
        if with_model:
            p.add_argument("--model", type=Path, required=True,
                           help="fitted model artifact path")
        if with_preset:
            p.add_argument("--preset", default="paper",
                           help=f"one of {sorted(D2_PRESETS)}")

    common(sub.add_parser("simulate", help="write one trajectory CSV"), with_T=True)
    common(sub.add_parser("fit", help="train the LSE and write a model artifact"),
           with_T=True)
    common(sub.add_parser("eval", help="counterfactual error of a stored model"),
           with_T=True, with_model=True)
    common(sub.add_parser("bounds", help="evaluate all applicable bound formulas"))
    common(sub.add_parser("rate-sweep", help="(T x replicates) error experiment"))
    common(sub.add_parser("verify", help="run the property suites"))
    common(sub.add_parser("reproduce-d2",
                          help="random radial-basis system reproduction"),
           with_preset=True)
    return parser


def _load(args):
    cfg = load_config(args.config) if args.config else default_config()
    seed = args.seed if args.seed is not None else cfg.seed
    out = args.out if args.out is not None else Path(cfg.section("output")["dir"])
    out.mkdir(parents=True, exist_ok=True)
    return cfg, seed, out


def _first_T(cfg, args) -> int:
    if getattr(args, "T", None) is not None:
        return args.T
    return int(cfg.section("sweep")["T"][0])


def _cmd_simulate(args) -> int:
    cfg, seed, out = _load(args)
    from .config import build_system

    spec = build_system(cfg)
    T = _first_T(cfg, args)
    traj = simulate(spec, T, seed)
    columns = (["t"] + [f"x{j}" for j in range(spec.d_x)]
               + [f"y{j}" for j in range(spec.d_y)]
               + [f"w{j}" for j in range(spec.d_y)])
    rows = [[t] + list(traj.states[t]) + list(traj.outputs[t]) + list(traj.noises[t])
            for t in range(T)]
    path = out / "trajectory.csv"
    write_csv(path, config_comments(cfg, [f"seed: {seed}", f"T: {T}"]), columns, rows)
    print(f"wrote {path}")
    return 0


def _cmd_fit(args) -> int:
    cfg, seed, out = _load(args)
    from .config import build_class, build_system

    spec = build_system(cfg)
    hyp = build_class(cfg, spec)
    T = _first_T(cfg, args)
    traj = simulate(spec, T, child_seed(seed, "train", T, 0))
    est = fit_least_squares(hyp, traj)
    path = out / "model.txt"
    save_model(est, path, extra_meta={"training_error": training_error(est, traj),
                                      "seed": seed, "T": T})
    print(f"wrote {path} (training error {training_error(est, traj):.6g})")
    return 0


def _cmd_eval(args) -> int:
    cfg, seed, out = _load(args)
    from .config import build_system

    spec = build_system(cfg)
    model = load_model(args.model)
    T = _first_T(cfg, args)
    n_fresh = int(cfg.section("sweep")["n_fresh"])
    err, se = counterfactual_error(model, spec, T, n_fresh, child_seed(seed, "eval"))
    path = out / "eval.csv"
    write_csv(path, config_comments(cfg, [f"seed: {seed}", f"model: {args.model}"]),
              ["T", "n_fresh", "error", "se"], [[T, n_fresh, err, se]])
    print(f"wrote {path} (error {err:.6g} +- {se:.6g})")
    return 0


def _cmd_bounds(args) -> int:
    cfg, seed, out = _load(args)
    from .config import build_class, build_system
    from .experiments import _bounds_for_T, _entropy_model, _sigma_bound

    spec = build_system(cfg)
    hyp = build_class(cfg, spec)
    bounds_cfg = cfg.section("bounds")
    columns = ["name", "sigma_w", "T", "d_y", "sigma_T_sq", "gamma", "delta",
               "alpha_trunc", "term_training", "term_quantization",
               "term_generalization", "total"]
    rows = []
    for T in cfg.section("sweep")["T"]:
        sigma_sq = _sigma_bound(cfg, hyp, spec, T)
        model = _entropy_model(cfg, hyp)
        if not math.isnan(sigma_sq):
            bal = balance(model, spec.noise_sigma, T, spec.d_y, sigma_sq)
            terms = master_bound_terms(BoundInputs(
                sigma_w=spec.noise_sigma, T=T, d_y=spec.d_y, entropy=model,
                sigma_T_sq=sigma_sq, gamma=bal.gamma, delta=bal.delta,
                alpha_trunc=bal.alpha_trunc))
            rows.append(["master-balanced", spec.noise_sigma, T, spec.d_y, sigma_sq,
                         bal.gamma, bal.delta, bal.alpha_trunc, terms["training"],
                         terms["quantization"], terms["generalization"], bal.value])
            if isinstance(model, PowerLawEntropy) and model.q < 2:
                rr = nonparametric_rate(model.p, model.q, spec.noise_sigma, T,
                                        sigma_sq, d_y=spec.d_y)
                rows.append(["rate-nonparametric", spec.noise_sigma, T, spec.d_y,
                             sigma_sq, rr.gamma, rr.delta, 0.0, math.nan, math.nan,
                             math.nan, rr.exact])
            elif isinstance(model, PowerLawEntropy):
                val = heavy_rate(model.p, model.q, spec.noise_sigma, T, spec.d_y,
                                 sigma_sq, bounds_cfg["heavy_multiplier"])
                rows.append(["rate-heavy", spec.noise_sigma, T, spec.d_y, sigma_sq,
                             math.nan, math.nan, math.nan, math.nan, math.nan,
                             math.nan, val])
            elif isinstance(model, LogLinearEntropy):
                val = parametric_rate(model.p, model.c, spec.noise_sigma, T,
                                      spec.d_y, sigma_sq,
                                      bounds_cfg["parametric_multiplier"])
                rows.append(["rate-parametric", spec.noise_sigma, T, spec.d_y,
                             sigma_sq, math.nan, math.nan, math.nan, math.nan,
                             math.nan, math.nan, val])
            rows.append(["sigma-proxy", spec.noise_sigma, T, spec.d_y, sigma_sq,
                         math.nan, math.nan, math.nan, math.nan, math.nan,
                         math.nan, sigma_sq])
    path = out / "bounds.csv"
    write_csv(path, config_comments(cfg, [f"seed: {seed}"]), columns, rows)
    print(f"wrote {path}")
    return 0


def _cmd_rate_sweep(args) -> int:
    cfg, seed, out = _load(args)
    report = rate_sweep(cfg, seed=seed, threads=args.threads)
    path = out / "rate_sweep.csv"
    write_csv(path, config_comments(cfg, [f"seed: {seed}"]), REPORT_COLUMNS,
              report.rows, report.footer())
    print(f"wrote {path}")
    return 0


def _cmd_verify(args) -> int:
    cfg, seed, out = _load(args)
    results = standard_verification_suite(seed=seed)
    columns = ["suite", "name", "statistic", "bound", "slack", "status"]
    rows = [list(r.row()) for r in results]
    path = out / "verify.csv"
    write_csv(path, config_comments(cfg, [f"seed: {seed}"]), columns, rows)
    width = max(len(f"{r.suite}/{r.name}") for r in results)
    for r in results:
        print(f"{(r.suite + '/' + r.name).ljust(width)}  "
              f"stat={r.statistic:10.4g}  bound={r.bound:10.4g}  "
              f"{'pass' if r.passed else 'FAIL'}")
    n_fail = sum(not r.passed for r in results)
    print(f"wrote {path}")
    if n_fail:
        print(f"verify: {n_fail} of {len(results)} checks failed", file=sys.stderr)
        return 1
    return 0


def _cmd_reproduce_d2(args) -> int:
    cfg, seed, out = _load(args)
    report = reproduce_d2(args.preset, seed=seed, threads=args.threads)
    path = out / "reproduce_d2.csv"
    write_csv(path, config_comments(cfg, [f"seed: {seed}", f"preset: {args.preset}"]),
              REPORT_COLUMNS, report.rows, report.footer())
    print(f"wrote {path} (slope {report.rate.slope:.4f})")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "fit": _cmd_fit,
    "eval": _cmd_eval,
    "bounds": _cmd_bounds,
    "rate-sweep": _cmd_rate_sweep,
    "verify": _cmd_verify,
    "reproduce-d2": _cmd_reproduce_d2,
}


def run(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ModelArtifactError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return 2
    except EntropyDivergenceError as exc:
        print(f"bounds error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
