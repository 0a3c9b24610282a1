"""Solver for weighted least squares with chained difference and box constraints.

    minimize_theta  1/2 sum_i w_i (theta_i - y_i)^2
    subject to      |theta_{i+1} - theta_i| <= cap_i,   lo <= theta_i <= hi

This is the node problem of Lipschitz-constrained scalar regression.  The
solver runs over-relaxed ADMM on the row-equilibrated constraints (difference
rows scaled by 1/cap_i), with a banded Cholesky factor for the tridiagonal
linear system, then polishes by solving the equality-constrained KKT system on
the detected active set, iterating add-violated / drop-wrong-sign until the
exact KKT residual meets the tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import cholesky_banded, cho_solve_banded


class ChainQPError(RuntimeError):
    """Raised when the solver cannot reach an acceptable KKT residual."""


@dataclass
class ChainQPResult:
    theta: np.ndarray
    duals: np.ndarray          # multipliers for [difference rows; box rows]
    kkt_residual: float
    iterations: int
    polish_rounds: int


def _diff(theta: np.ndarray) -> np.ndarray:
    return theta[1:] - theta[:-1]


def _diff_t(v: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(n)
    out[:-1] -= v
    out[1:] += v
    return out


def _kkt_residual(y, w, caps, lo, hi, theta, lam) -> float:
    n = len(y)
    d = _diff(theta)
    lam_d, lam_b = lam[: n - 1], lam[n - 1:]
    stat = np.abs(w * (theta - y) + _diff_t(lam_d, n) + lam_b).max()
    prim = max(
        float(np.maximum(np.abs(d) - caps, 0.0).max(initial=0.0)),
        float(np.maximum(theta - hi, 0.0).max()),
        float(np.maximum(lo - theta, 0.0).max()),
    )
    slack_d = np.where(lam_d > 0, caps - d, d + caps)
    slack_b = np.where(lam_b > 0, hi - theta, theta - lo)
    comp = max(
        float(np.abs(lam_d * slack_d).max(initial=0.0)),
        float(np.abs(lam_b * slack_b).max(initial=0.0)),
    )
    return max(stat, prim, comp)


def _admm(y, w, caps, lo, hi, theta0, max_iter, tol, rho0=1.0):
    n = len(y)
    q = -w * y
    s = 1.0 / caps
    l = np.concatenate([-np.ones(n - 1), np.full(n, lo)])
    u = np.concatenate([np.ones(n - 1), np.full(n, hi)])

    def factor(rho):
        s2 = rho * s * s
        main = w + rho
        main = main.astype(float).copy()
        main[:-1] += s2
        main[1:] += s2
        ab = np.zeros((2, n))
        ab[0, 1:] = -s2
        ab[1] = main
        return cholesky_banded(ab)

    def amul(t):
        return np.concatenate([s * _diff(t), t])

    def atmul(v):
        return _diff_t(s * v[: n - 1], n) + v[n - 1:]

    rho = rho0
    cb = factor(rho)
    z = np.clip(amul(theta0), l, u)
    dual = np.zeros(2 * n - 1)
    theta = theta0.copy()
    alpha = 1.6
    for it in range(1, max_iter + 1):
        theta = cho_solve_banded((cb, False), -q + rho * atmul(z - dual))
        a_theta = amul(theta)
        relaxed = alpha * a_theta + (1 - alpha) * z
        z_new = np.clip(relaxed + dual, l, u)
        dual += relaxed - z_new
        r_prim = np.abs(a_theta - z_new).max()
        r_dual = rho * np.abs(atmul(z_new - z)).max()
        z = z_new
        if r_prim < tol and r_dual < tol:
            break
        if it % 50 == 0 and (r_prim > 5 * r_dual or r_dual > 5 * r_prim):
            scale = float(np.sqrt(max(r_prim, 1e-16) / max(r_dual, 1e-16)))
            scale = min(max(scale, 0.2), 5.0)
            if abs(scale - 1.0) > 0.1:
                dual /= scale
                rho *= scale
                cb = factor(rho)
    lam = rho * dual
    lam[: n - 1] *= s  # undo row scaling on multipliers
    return theta, lam, it


def _constraint_matrix(n: int) -> sp.csr_matrix:
    rows, cols, data = [], [], []
    for i in range(n - 1):
        rows += [i, i]
        cols += [i, i + 1]
        data += [-1.0, 1.0]
    for i in range(n):
        rows.append(n - 1 + i)
        cols.append(i)
        data.append(1.0)
    return sp.csr_matrix((data, (rows, cols)), shape=(2 * n - 1, n))


def _polish(y, w, caps, lo, hi, theta, lam, max_rounds=80, reg=1e-12):
    n = len(y)
    A = _constraint_matrix(n)
    q = -w * y
    l = np.concatenate([-caps, np.full(n, lo)])
    u = np.concatenate([caps, np.full(n, hi)])
    a_theta = A @ theta
    tol_act = 1e-8 * np.maximum(1.0, np.abs(u) + np.abs(l))
    low = (l - a_theta > -tol_act) | (lam < -1e-8)
    up = (a_theta - u > -tol_act) | (lam > 1e-8)
    both = low & up
    low[both] = lam[both] < 0
    up[both] = ~(lam[both] < 0)

    best = (theta, lam, _kkt_residual(y, w, caps, lo, hi, theta, lam))
    for rnd in range(1, max_rounds + 1):
        act = np.where(low | up)[0]
        if act.size == 0:
            theta_p = y.copy()
            lam_p = np.zeros(2 * n - 1)
        else:
            b = np.where(low[act], l[act], u[act])
            a_act = A[act]
            kkt = sp.bmat(
                [[sp.diags(w), a_act.T], [a_act, -reg * sp.eye(act.size)]], format="csc"
            )
            lu = spla.splu(kkt)
            rhs = np.concatenate([-q, b])
            sol = lu.solve(rhs)
            # one step of iterative refinement against the unregularized system
            resid = rhs - kkt @ sol
            resid[n:] -= reg * sol[n:]
            sol = sol + lu.solve(resid)
            theta_p = sol[:n]
            nu = sol[n:]
            lam_p = np.zeros(2 * n - 1)
            lam_p[act] = nu
        a_theta = A @ theta_p
        inactive = ~(low | up)
        viol_low = (l - a_theta > 1e-11) & inactive
        viol_up = (a_theta - u > 1e-11) & inactive
        wrong = np.zeros(2 * n - 1, dtype=bool)
        if act.size:
            wrong[act[low[act] & (nu > 1e-11)]] = True
            wrong[act[up[act] & (nu < -1e-11)]] = True
        res = _kkt_residual(y, w, caps, lo, hi, theta_p, lam_p)
        if res < best[2]:
            best = (theta_p, lam_p, res)
        if not viol_low.any() and not viol_up.any() and not wrong.any():
            return theta_p, lam_p, res, rnd
        low[viol_low] = True
        up[viol_up] = True
        low &= ~wrong
        up &= ~wrong
    return best[0], best[1], best[2], max_rounds


def solve_chain_qp(y, weights, caps, lo, hi, kkt_tol=1e-8, max_admm_iter=3000,
                   max_cycles=4) -> ChainQPResult:
    """Solve the chain-constrained QP to the requested exact KKT residual."""
    y = np.asarray(y, dtype=float)
    w = np.asarray(weights, dtype=float)
    caps = np.asarray(caps, dtype=float)
    n = len(y)
    if n == 0:
        raise ValueError("empty problem")
    if np.any(caps <= 0):
        raise ValueError("difference caps must be strictly positive")
    if lo > hi:
        raise ValueError("empty value range")
    if n == 1:
        theta = np.array([min(max(y[0], lo), hi)])
        lam = np.array([w[0] * (theta[0] - y[0]) * -1.0])
        res = _kkt_residual(y, w, np.empty(0), lo, hi, theta, lam)
        return ChainQPResult(theta, lam, res, 0, 0)

    theta = np.clip(y, lo, hi)
    lam = np.zeros(2 * n - 1)
    iterations = 0
    rounds = 0
    best = (theta, lam, np.inf)
    for cycle in range(max_cycles):
        theta, lam, it = _admm(y, w, caps, lo, hi, best[0], max_admm_iter, tol=1e-7)
        iterations += it
        theta_p, lam_p, res, rnd = _polish(y, w, caps, lo, hi, theta, lam)
        rounds += rnd
        if res < best[2]:
            best = (theta_p, lam_p, res)
        if best[2] <= kkt_tol:
            return ChainQPResult(best[0], best[1], best[2], iterations, rounds)
    if best[2] <= 1e-6:
        return ChainQPResult(best[0], best[1], best[2], iterations, rounds)
    raise ChainQPError(
        f"chain QP did not converge: KKT residual {best[2]:.3e} after "
        f"{iterations} ADMM iterations and {rounds} polish rounds"
    )
