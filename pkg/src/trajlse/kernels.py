"""Radial basis kernel and regularized symmetric positive-definite solves."""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.spatial.distance import cdist


class GramFactorizationError(RuntimeError):
    """Raised when the Gram matrix cannot be factorized even with max jitter."""


def rbf_kernel(X, Z, bandwidth: float = 1.0) -> np.ndarray:
    """k(x, z) = exp(-||x - z||^2 / (2 h^2)) for row batches X (n,d), Z (m,d)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    d2 = cdist(X, Z, metric="sqeuclidean")
    return np.exp(-0.5 * d2 / bandwidth**2)


def gram_matrix(X, bandwidth: float = 1.0) -> np.ndarray:
    return rbf_kernel(X, X, bandwidth)


def solve_regularized_gram(K: np.ndarray, ridge: float, B: np.ndarray,
                           jitter_scale: float = 1e-10, max_jitter_steps: int = 6):
    """Solve (K + ridge*I + jitter*I) C = B by Cholesky, escalating jitter.

    The base jitter is ``jitter_scale * trace(K) / n``; on factorization failure
    it is multiplied by 10 up to ``max_jitter_steps`` times before giving up.
    Returns ``(C, jitter_used)``.
    """
    n = K.shape[0]
    base = jitter_scale * np.trace(K) / max(n, 1)
    jitter = base if base > 0 else jitter_scale
    for _ in range(max_jitter_steps):
        try:
            cf = cho_factor(K + (ridge + jitter) * np.eye(n), lower=True)
            return cho_solve(cf, B), jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise GramFactorizationError(
        f"Gram matrix of size {n} is numerically degenerate; "
        f"Cholesky failed up to jitter {jitter:.3e}"
    )
