"""Least squares estimators over the supported hypothesis classes.

All estimators follow the scikit-learn protocol: hyperparameters in
``__init__``, data-dependent state on trailing-underscore attributes set by
``fit(X, y)``, predictions via ``predict(X)``.  Each exposes its evaluable map
as ``model_`` and a class-membership certificate on fitted attributes.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._chain_qp import solve_chain_qp
from .functions import GLMMap, RBFExpansion, Tabulated1D, evaluate, get_link
from .kernels import gram_matrix, rbf_kernel, solve_regularized_gram
from .systems import Trajectory


def _check_fit_arrays(X, y):
    X = check_array(X, ensure_2d=True, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y_mat = y.reshape(-1, 1)
    elif y.ndim == 2:
        y_mat = y
    else:
        raise ValueError("y must be 1-D or 2-D")
    if y_mat.shape[0] != X.shape[0]:
        raise ValueError("X and y have inconsistent lengths")
    return X, y_mat, y.ndim


class FiniteClassLSE(BaseEstimator, RegressorMixin):
    """Exhaustive least squares over a finite list of candidate maps.

    Ties in the empirical objective break toward the lowest index, so the fit
    is exactly reproducible.
    """

    def __init__(self, members=()):
        self.members = members

    def fit(self, X, y):
        if len(self.members) == 0:
            raise ValueError("finite class must be nonempty")
        X, y_mat, y_ndim = _check_fit_arrays(X, y)
        objectives = np.empty(len(self.members))
        for i, member in enumerate(self.members):
            pred = evaluate(member, X, X.shape[1])
            objectives[i] = np.mean(np.sum((y_mat - pred) ** 2, axis=1))
        best = int(np.argmin(objectives))  # argmin returns the first minimizer
        self.objectives_ = objectives
        self.best_index_ = best
        self.model_ = self.members[best]
        self.objective_ = float(objectives[best])
        self.n_features_in_ = X.shape[1]
        self._y_ndim = y_ndim
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        out = evaluate(self.model_, X, self.n_features_in_)
        return out[:, 0] if self._y_ndim == 1 else out


class LipschitzScalarLSE(BaseEstimator, RegressorMixin):
    """Lipschitz-constrained scalar regression on the sorted design points.

    Solves for node values theta at the distinct design points under
    |theta_i - theta_j| <= L |x_i - x_j| for adjacent points and a value-range
    box, then extends by piecewise-linear interpolation with constant clamping
    outside the design range (both preserve the Lipschitz constant).
    Duplicate design points are merged by weight-adjusted target averaging.
    """

    def __init__(self, lipschitz=1.0, value_range=(-1.0, 1.0), kkt_tol=1e-8,
                 max_admm_iter=3000, certificate_tol=1e-8):
        self.lipschitz = lipschitz
        self.value_range = value_range
        self.kkt_tol = kkt_tol
        self.max_admm_iter = max_admm_iter
        self.certificate_tol = certificate_tol

    def fit(self, X, y):
        X, y_mat, y_ndim = _check_fit_arrays(X, y)
        if X.shape[1] != 1 or y_mat.shape[1] != 1:
            raise ValueError("Lipschitz regression requires d_x = d_y = 1")
        if self.lipschitz < 0:
            raise ValueError("lipschitz must be nonnegative")
        lo, hi = map(float, self.value_range)
        x = X[:, 0]
        yv = y_mat[:, 0]

        xs, inverse, counts = np.unique(x, return_inverse=True, return_counts=True)
        sums = np.bincount(inverse, weights=yv, minlength=xs.size)
        targets = sums / counts
        weights = counts.astype(float)

        if self.lipschitz == 0.0 or xs.size == 1:
            const = float(np.clip(np.average(targets, weights=weights), lo, hi))
            node_values = np.full(xs.size, const)
            self.iterations_ = 0
            self.kkt_residual_ = 0.0
            self.duals_ = None
        else:
            caps = self.lipschitz * np.diff(xs)
            result = solve_chain_qp(targets, weights, caps, lo, hi,
                                    kkt_tol=self.kkt_tol,
                                    max_admm_iter=self.max_admm_iter)
            node_values = result.theta
            self.iterations_ = result.iterations
            self.kkt_residual_ = result.kkt_residual
            self.duals_ = result.duals

        self.node_x_ = xs
        self.node_values_ = node_values
        self.model_ = Tabulated1D(xs, node_values)
        self.objective_ = float(np.mean((yv - node_values[inverse]) ** 2))
        self.constraint_slack_ = self._certificate(xs, node_values, lo, hi)
        self.n_features_in_ = 1
        self._y_ndim = y_ndim
        return self

    def _certificate(self, xs, values, lo, hi):
        slack = max(float(np.max(values - hi, initial=0.0)),
                    float(np.max(lo - values, initial=0.0)))
        if xs.size > 1:
            over = np.abs(np.diff(values)) - self.lipschitz * np.diff(xs)
            slack = max(slack, float(np.max(over, initial=0.0)))
        if slack > self.certificate_tol:
            raise RuntimeError(f"fit violates class membership by {slack:.3e}")
        return slack

    def predict(self, X):
        check_is_fitted(self, "model_")
        out = evaluate(self.model_, X, 1)
        return out[:, 0] if self._y_ndim == 1 else out


class KernelRidgeBallLSE(BaseEstimator, RegressorMixin):
    """Norm-ball-constrained least squares in an RBF kernel space.

    Solves the ridge dual (K + T*lambda*I) c = Y per output coordinate and
    bisects on lambda until the fitted Hilbert norm sqrt(sum_j c_j^T K c_j)
    is within ``norm_tol`` of the ball radius; if the (jitter-regularized)
    interpolant already has a smaller norm, lambda stays at the jitter floor.
    The ball-constrained minimizer is recovered exactly in the limit of the
    tolerance by Lagrangian duality of the strongly convex objective.
    """

    def __init__(self, bandwidth=1.0, radius=1.0, norm_tol=0.01, jitter=1e-10,
                 max_bisect=200):
        self.bandwidth = bandwidth
        self.radius = radius
        self.norm_tol = norm_tol
        self.jitter = jitter
        self.max_bisect = max_bisect

    def fit(self, X, y):
        X, y_mat, y_ndim = _check_fit_arrays(X, y)
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        T = X.shape[0]
        K = gram_matrix(X, self.bandwidth)

        def solve_at(lam):
            C, _ = solve_regularized_gram(K, T * lam, y_mat, jitter_scale=self.jitter)
            norm = float(np.sqrt(max(np.sum(C * (K @ C)), 0.0)))
            return C, norm

        C, norm = solve_at(0.0)
        lam = 0.0
        bisect_steps = 0
        if norm > self.radius * (1.0 + self.norm_tol):
            lam_lo, lam_hi = 0.0, max(np.trace(K) / T, 1.0)
            _, norm_hi = solve_at(lam_hi)
            while norm_hi > self.radius and lam_hi < 1e12:
                lam_hi *= 10.0
                _, norm_hi = solve_at(lam_hi)
                bisect_steps += 1
            for _ in range(self.max_bisect):
                lam = 0.5 * (lam_lo + lam_hi)
                C, norm = solve_at(lam)
                bisect_steps += 1
                if abs(norm - self.radius) <= self.norm_tol * self.radius:
                    break
                if norm > self.radius:
                    lam_lo = lam
                else:
                    lam_hi = lam
        self.X_fit_ = X
        self.dual_coef_ = C
        self.ridge_lambda_ = float(lam)
        self.hilbert_norm_ = norm
        self.bisect_steps_ = bisect_steps
        self.model_ = RBFExpansion(X, C, self.bandwidth)
        pred = K @ C
        self.objective_ = float(np.mean(np.sum((y_mat - pred) ** 2, axis=1)))
        self.n_features_in_ = X.shape[1]
        self._y_ndim = y_ndim
        return self

    def predict(self, X):
        check_is_fitted(self, "dual_coef_")
        X = check_array(X, ensure_2d=True, dtype=float)
        out = rbf_kernel(X, self.X_fit_, self.bandwidth) @ self.dual_coef_
        return out[:, 0] if self._y_ndim == 1 else out


class GLMProjectedLSE(BaseEstimator, RegressorMixin):
    """Least squares over maps phi(A x) with a Frobenius-ball constraint on A.

    Projected gradient descent from A = 0 with Armijo backtracking; stops at
    projected-gradient norm below ``grad_tol`` or at the iteration cap and
    returns the best iterate seen.
    """

    def __init__(self, link="tanh", frobenius_bound=1.0, grad_tol=1e-8,
                 max_iter=10_000, certificate_tol=1e-6):
        self.link = link
        self.frobenius_bound = frobenius_bound
        self.grad_tol = grad_tol
        self.max_iter = max_iter
        self.certificate_tol = certificate_tol

    def _project(self, A):
        norm = np.linalg.norm(A)
        if norm <= self.frobenius_bound or norm == 0.0:
            return A
        return A * (self.frobenius_bound / norm)

    def fit(self, X, y):
        X, y_mat, y_ndim = _check_fit_arrays(X, y)
        if self.frobenius_bound <= 0:
            raise ValueError("frobenius_bound must be positive")
        link = get_link(self.link)
        T, d_x = X.shape
        d_y = y_mat.shape[1]

        def objective(A):
            Z = X @ A.T
            return float(np.mean(np.sum((link.value(Z) - y_mat) ** 2, axis=1)))

        def gradient(A):
            Z = X @ A.T
            R = (link.value(Z) - y_mat) * link.deriv(Z)
            return (2.0 / T) * R.T @ X

        A = np.zeros((d_y, d_x))
        obj = objective(A)
        best_A, best_obj = A.copy(), obj
        step = 1.0
        pg_norm = np.inf
        it = 0
        for it in range(1, self.max_iter + 1):
            G = gradient(A)
            if not np.isfinite(G).all() or not np.isfinite(obj):
                raise FloatingPointError(
                    f"non-finite objective or gradient at iteration {it}")
            # reference gradient mapping at unit step for the stopping rule
            pg_norm = np.linalg.norm(A - self._project(A - G))
            if pg_norm <= self.grad_tol:
                break
            step = min(step * 2.0, 1e8)
            while True:
                A_new = self._project(A - step * G)
                obj_new = objective(A_new)
                delta = A_new - A
                if obj_new <= obj + np.sum(G * delta) + np.sum(delta**2) / (2 * step):
                    break
                step *= 0.5
                if step < 1e-18:
                    A_new, obj_new = A, obj
                    break
            A, obj = A_new, obj_new
            if obj < best_obj:
                best_A, best_obj = A.copy(), obj

        self.coef_matrix_ = best_A
        self.objective_ = best_obj
        self.iterations_ = it
        self.projected_grad_norm_ = float(pg_norm)
        norm = float(np.linalg.norm(best_A))
        if norm > self.frobenius_bound * (1 + self.certificate_tol):
            raise RuntimeError(f"fit violates the Frobenius ball: {norm:.6f}")
        self.frobenius_norm_ = norm
        self.model_ = GLMMap(best_A, link)
        self.n_features_in_ = d_x
        self._y_ndim = y_ndim
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_matrix_")
        out = evaluate(self.model_, X, self.n_features_in_)
        return out[:, 0] if self._y_ndim == 1 else out


def training_error(model, traj: Trajectory) -> float:
    """Empirical squared loss (1/T) sum_t ||y_t - f(x_t)||^2 on a trajectory."""
    pred = evaluate(model, traj.states, traj.states.shape[1])
    return float(np.mean(np.sum((traj.outputs - pred) ** 2, axis=1)))


def fit_least_squares(hypothesis, traj: Trajectory):
    """Fit the least squares estimator for a hypothesis class on a trajectory."""
    from . import spaces

    X, Y = traj.states, traj.outputs
    if isinstance(hypothesis, spaces.Lipschitz1D):
        est = LipschitzScalarLSE(lipschitz=hypothesis.lipschitz,
                                 value_range=hypothesis.value_range)
        return est.fit(X, Y)
    if isinstance(hypothesis, spaces.RKHSBall):
        est = KernelRidgeBallLSE(bandwidth=hypothesis.bandwidth,
                                 radius=hypothesis.radius)
        return est.fit(X, Y)
    if isinstance(hypothesis, spaces.GLMClass):
        est = GLMProjectedLSE(link=hypothesis.link,
                              frobenius_bound=hypothesis.frobenius_bound)
        return est.fit(X, Y)
    if isinstance(hypothesis, spaces.FiniteClass):
        est = FiniteClassLSE(members=hypothesis.members)
        return est.fit(X, Y)
    raise TypeError(f"unsupported hypothesis class {type(hypothesis).__name__}")
