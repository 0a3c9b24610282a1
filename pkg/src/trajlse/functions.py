"""Evaluable vector maps shared by system truths, hypothesis members and covers.

Every map follows one batch contract: called with an ``(n, d_in)`` array it
returns an ``(n, d_out)`` array.  ``as_points`` normalizes user input (scalars,
flat vectors) into that shape.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def as_points(x, d_in: int) -> np.ndarray:
    """Coerce ``x`` into an ``(n, d_in)`` float array."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        if d_in != 1:
            raise ValueError(f"scalar input for a map with d_in={d_in}")
        return arr.reshape(1, 1)
    if arr.ndim == 1:
        if d_in == 1:
            return arr.reshape(-1, 1)
        if arr.shape[0] == d_in:
            return arr.reshape(1, d_in)
        raise ValueError(f"cannot interpret shape {arr.shape} as points in R^{d_in}")
    if arr.ndim == 2 and arr.shape[1] == d_in:
        return arr
    raise ValueError(f"cannot interpret shape {arr.shape} as points in R^{d_in}")


def evaluate(fn, x, d_in: int) -> np.ndarray:
    """Evaluate a map or fitted estimator on points, returning ``(n, d_out)``."""
    pts = as_points(x, d_in)
    if isinstance(fn, VectorMap):
        out = fn._eval(pts)
    elif hasattr(fn, "predict"):
        out = np.asarray(fn.predict(pts), dtype=float)
    elif callable(fn):
        out = np.asarray(fn(pts), dtype=float)
    else:
        raise TypeError(f"cannot evaluate object of type {type(fn).__name__}")
    if out.ndim == 1:
        out = out.reshape(-1, 1)
    return out


class VectorMap:
    """Base for evaluable maps; subclasses set ``d_in``/``d_out`` and ``_eval``."""

    d_in: int
    d_out: int

    def __call__(self, x) -> np.ndarray:
        return self._eval(as_points(x, self.d_in))

    def _eval(self, pts: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError


@dataclass(frozen=True)
class ZeroMap(VectorMap):
    d_in: int = 1
    d_out: int = 1

    def _eval(self, pts):
        return np.zeros((pts.shape[0], self.d_out))


class LinearMap(VectorMap):
    """f(x) = A x for a fixed matrix (scalars accepted for the 1-D case)."""

    def __init__(self, matrix):
        A = np.atleast_2d(np.asarray(matrix, dtype=float))
        self.matrix = A
        self.d_in = A.shape[1]
        self.d_out = A.shape[0]

    def _eval(self, pts):
        return pts @ self.matrix.T


class ScaledTanh(VectorMap):
    """Elementwise f(x) = gain * tanh(x); Lipschitz constant exactly |gain|."""

    def __init__(self, gain: float, d: int = 1):
        self.gain = float(gain)
        self.d_in = d
        self.d_out = d

    def _eval(self, pts):
        return self.gain * np.tanh(pts)


class Tabulated1D(VectorMap):
    """Piecewise-linear scalar function given by node values, clamped outside."""

    d_in = 1
    d_out = 1

    def __init__(self, node_x, node_y):
        x = np.asarray(node_x, dtype=float)
        y = np.asarray(node_y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or x.size == 0:
            raise ValueError("node_x and node_y must be equal-length 1-D arrays")
        if x.size > 1 and not np.all(np.diff(x) > 0):
            raise ValueError("node_x must be strictly increasing")
        self.node_x = x
        self.node_y = y

    def _eval(self, pts):
        return np.interp(pts[:, 0], self.node_x, self.node_y).reshape(-1, 1)

    def lipschitz_constant(self) -> float:
        """Exact Lipschitz constant of the interpolant (0 for a single node)."""
        if self.node_x.size < 2:
            return 0.0
        return float(np.max(np.abs(np.diff(self.node_y) / np.diff(self.node_x))))


class RBFExpansion(VectorMap):
    """f(x) = W^T k(x) with k_i(x) = exp(-||x - c_i||^2 / (2 h^2))."""

    def __init__(self, centers, weights, bandwidth: float = 1.0):
        C = np.atleast_2d(np.asarray(centers, dtype=float))
        W = np.asarray(weights, dtype=float)
        if W.ndim == 1:
            W = W.reshape(-1, 1)
        if W.shape[0] != C.shape[0]:
            raise ValueError("need one weight row per center")
        if bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        self.centers = C
        self.weights = W
        self.bandwidth = float(bandwidth)
        self.d_in = C.shape[1]
        self.d_out = W.shape[1]

    def _eval(self, pts):
        from .kernels import rbf_kernel

        return rbf_kernel(pts, self.centers, self.bandwidth) @ self.weights


class GLMMap(VectorMap):
    """f(x) = phi(A x) for a known scalar link applied elementwise."""

    def __init__(self, matrix, link):
        A = np.atleast_2d(np.asarray(matrix, dtype=float))
        self.matrix = A
        self.link = get_link(link)
        self.d_in = A.shape[1]
        self.d_out = A.shape[0]

    def _eval(self, pts):
        return self.link.value(pts @ self.matrix.T)


class FunctionMap(VectorMap):
    """Wrap a user closure operating on ``(n, d_in)`` arrays."""

    def __init__(self, fn, d_in: int, d_out: int, name: str = "closure"):
        self.fn = fn
        self.d_in = d_in
        self.d_out = d_out
        self.name = name

    def _eval(self, pts):
        out = np.asarray(self.fn(pts), dtype=float)
        if out.ndim == 1:
            out = out.reshape(-1, 1)
        if out.shape != (pts.shape[0], self.d_out):
            raise ValueError(f"closure returned shape {out.shape}, expected {(pts.shape[0], self.d_out)}")
        return out


class DifferenceMap(VectorMap):
    """f - g, used for members of the shifted space around the truth."""

    def __init__(self, f: VectorMap, g: VectorMap):
        if f.d_in != g.d_in or f.d_out != g.d_out:
            raise ValueError("maps must share dimensions")
        self.f = f
        self.g = g
        self.d_in = f.d_in
        self.d_out = f.d_out

    def _eval(self, pts):
        return self.f._eval(pts) - self.g._eval(pts)


class ShiftedMap(VectorMap):
    """f + constant offset vector."""

    def __init__(self, f: VectorMap, offset):
        off = np.atleast_1d(np.asarray(offset, dtype=float))
        if off.shape != (f.d_out,):
            raise ValueError("offset must match output dimension")
        self.f = f
        self.offset = off
        self.d_in = f.d_in
        self.d_out = f.d_out

    def _eval(self, pts):
        return self.f._eval(pts) + self.offset


@dataclass(frozen=True)
class Link:
    """Scalar link function with derivative, applied elementwise."""

    name: str
    value: callable = field(repr=False)
    deriv: callable = field(repr=False)


_LINKS = {
    "identity": Link("identity", lambda z: z, lambda z: np.ones_like(z)),
    "tanh": Link("tanh", np.tanh, lambda z: 1.0 / np.cosh(z) ** 2),
}


def get_link(link) -> Link:
    if isinstance(link, Link):
        return link
    try:
        return _LINKS[link]
    except KeyError:
        raise ValueError(f"unknown link {link!r}; available: {sorted(_LINKS)}") from None
