"""Columnar text artifacts for fitted models.

The artifact holds '#'-prefixed metadata (model kind, hyperparameters, solver
diagnostics), a column header, and the numeric data needed to re-evaluate the
fit elsewhere: design points and coefficients.
"""

from __future__ import annotations

import numpy as np

from .estimators import (FiniteClassLSE, GLMProjectedLSE, KernelRidgeBallLSE,
                         LipschitzScalarLSE)
from .functions import GLMMap, RBFExpansion, Tabulated1D, evaluate


class ModelArtifactError(ValueError):
    """Artifact is missing, malformed, or of unknown kind."""


def _write_table(fh, meta: dict, columns, matrix: np.ndarray):
    for k, v in meta.items():
        fh.write(f"# {k}: {v!r}\n")
    fh.write(",".join(columns) + "\n")
    for row in np.atleast_2d(matrix):
        fh.write(",".join(repr(float(v)) for v in row) + "\n")


def save_model(est, path, extra_meta=None) -> None:
    """Serialize a fitted estimator; finite-class fits are tabulated on a grid."""
    meta = dict(extra_meta or {})
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if isinstance(est, LipschitzScalarLSE):
            meta.update(kind="lipschitz-1d", lipschitz=est.lipschitz,
                        lo=est.value_range[0], hi=est.value_range[1],
                        objective=est.objective_, iterations=est.iterations_,
                        kkt_residual=est.kkt_residual_)
            data = np.column_stack([est.node_x_, est.node_values_])
            _write_table(fh, meta, ["x", "value"], data)
        elif isinstance(est, KernelRidgeBallLSE):
            d = est.X_fit_.shape[1]
            m = est.dual_coef_.shape[1]
            meta.update(kind="kernel-ridge", bandwidth=est.bandwidth,
                        radius=est.radius, ridge_lambda=est.ridge_lambda_,
                        hilbert_norm=est.hilbert_norm_, objective=est.objective_)
            cols = [f"x{j}" for j in range(d)] + [f"c{j}" for j in range(m)]
            _write_table(fh, meta, cols, np.hstack([est.X_fit_, est.dual_coef_]))
        elif isinstance(est, GLMProjectedLSE):
            meta.update(kind="glm", link=est.model_.link.name,
                        frobenius_bound=est.frobenius_bound,
                        objective=est.objective_, iterations=est.iterations_,
                        projected_grad_norm=est.projected_grad_norm_)
            d = est.coef_matrix_.shape[1]
            _write_table(fh, meta, [f"a{j}" for j in range(d)], est.coef_matrix_)
        elif isinstance(est, FiniteClassLSE):
            member = est.model_
            meta.update(kind="finite-tabulated", best_index=est.best_index_,
                        objective=est.objective_)
            if isinstance(member, Tabulated1D):
                xs, ys = member.node_x, member.node_y
            else:
                if est.n_features_in_ != 1:
                    raise ModelArtifactError(
                        "only scalar finite-class members can be tabulated")
                xs = np.linspace(-1.0, 1.0, 512)
                ys = evaluate(member, xs, 1)[:, 0]
            _write_table(fh, meta, ["x", "value"], np.column_stack([xs, ys]))
        else:
            raise ModelArtifactError(f"cannot serialize {type(est).__name__}")


def _read_table(path):
    meta, columns, rows = {}, None, []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].partition(":")
                meta[key.strip()] = val.strip()
                continue
            parts = line.split(",")
            if columns is None:
                columns = parts
            else:
                rows.append([float(p) for p in parts])
    if columns is None or not rows:
        raise ModelArtifactError(f"{path}: empty or malformed model artifact")
    return meta, columns, np.asarray(rows)


def load_model(path):
    """Rebuild the evaluable map from a model artifact."""
    try:
        meta, columns, data = _read_table(path)
    except FileNotFoundError:
        raise ModelArtifactError(f"model artifact not found: {path}") from None
    kind = meta.get("kind", "").strip("'\"")
    if kind in ("lipschitz-1d", "finite-tabulated"):
        return Tabulated1D(data[:, 0], data[:, 1])
    if kind == "kernel-ridge":
        d = sum(1 for c in columns if c.startswith("x"))
        bandwidth = float(meta["bandwidth"])
        return RBFExpansion(data[:, :d], data[:, d:], bandwidth)
    if kind == "glm":
        link = meta["link"].strip("'\"")
        return GLMMap(data, link)
    raise ModelArtifactError(f"{path}: unknown model kind {kind!r}")
