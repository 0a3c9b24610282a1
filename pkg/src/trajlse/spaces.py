"""Hypothesis classes, metric-entropy models, explicit covers and quantization.

Distances between functions are always measured in the supremum of pointwise
Euclidean norms, evaluated on finite grids: grid values lower-bound the true
supremum, and every certificate states the grid it was checked on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import substream
from .functions import GLMMap, Tabulated1D, evaluate, get_link
from .systems import UniformBallInit

COVER_SIZE_CAP = 1_000_000


class CoverSizeError(ValueError):
    """Requested cover would exceed the configured element cap."""


class CoverCertificationError(RuntimeError):
    """Constructed cover failed its randomized covering certificate."""


# ---------------------------------------------------------------------------
# hypothesis classes


@dataclass(frozen=True)
class Lipschitz1D:
    """Scalar L-Lipschitz functions [-B, B] -> value_range."""

    lipschitz: float
    value_range: tuple
    domain_bound: float

    def entropy_model(self, p: float | None = None):
        # Heuristic power-law scale matching the staircase cover construction.
        if p is None:
            p = 2.0 * self.lipschitz * self.domain_bound * math.log(3.0)
        return PowerLawEntropy(p=p, q=1.0)


@dataclass(frozen=True)
class RKHSBall:
    """Hilbert-norm ball of an RBF kernel space with polynomial eigendecay."""

    bandwidth: float
    radius: float
    domain_bound: float
    decay_amplitude: float = 1.0     # uniform bound on eigenfunctions
    decay_exponent: float = 1.0      # eigenvalue decay lambda_j ~ j^(-2 alpha)
    lambda1: float = 1.0

    def entropy_model(self, prefactor: float = 1.0):
        return RKHSEntropy(A=self.decay_amplitude, alpha=self.decay_exponent,
                           lambda1=self.lambda1, prefactor=prefactor)


@dataclass(frozen=True)
class GLMClass:
    """Maps phi(A x) with a known link and a Frobenius-bounded matrix."""

    link: str
    frobenius_bound: float
    d_x: int
    domain_bound: float

    def entropy_model(self):
        return LogLinearEntropy(p=2.0 * self.d_x**2,
                                c=2.0 * self.domain_bound * self.frobenius_bound)


@dataclass(frozen=True)
class FiniteClass:
    """Explicit finite list of candidate maps."""

    members: tuple
    domain_bound: float

    def __post_init__(self):
        if len(self.members) == 0:
            raise ValueError("finite class must be nonempty")

    def entropy_model(self):
        return FiniteEntropy(log_cardinality=math.log(len(self.members)))


# ---------------------------------------------------------------------------
# metric-entropy models


@dataclass(frozen=True)
class PowerLawEntropy:
    """log N(delta) = p * delta^(-q)."""

    p: float
    q: float

    def __post_init__(self):
        if self.p <= 0 or self.q <= 0 or not math.isfinite(self.q):
            raise ValueError("p and q must be positive and finite")


@dataclass(frozen=True)
class LogLinearEntropy:
    """log N(delta) = p * log(1 + c / delta)."""

    p: float
    c: float

    def __post_init__(self):
        if self.p <= 0 or self.c <= 0:
            raise ValueError("p and c must be positive")


@dataclass(frozen=True)
class RKHSEntropy:
    """Eigendecay bound (delta/A)^(-1/alpha) log(1 + lambda1 A^(1+1/(2a)) / delta^(1+1/(2a))).

    The prefactor multiplies the whole expression; the underlying calculation
    pins only the shape, so the constant is exposed.
    """

    A: float
    alpha: float
    lambda1: float
    prefactor: float = 1.0

    def __post_init__(self):
        if min(self.A, self.alpha, self.lambda1, self.prefactor) <= 0:
            raise ValueError("A, alpha, lambda1 and prefactor must be positive")


@dataclass(frozen=True)
class FiniteEntropy:
    """Constant metric entropy log M at every scale."""

    log_cardinality: float

    def __post_init__(self):
        if self.log_cardinality < 0:
            raise ValueError("log cardinality must be nonnegative")


def log_covering_bound(model, delta: float) -> float:
    """Evaluate the metric-entropy model at scale delta > 0."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if isinstance(model, PowerLawEntropy):
        return model.p * delta ** (-model.q)
    if isinstance(model, LogLinearEntropy):
        return model.p * math.log1p(model.c / delta)
    if isinstance(model, RKHSEntropy):
        e = 1.0 + 1.0 / (2.0 * model.alpha)
        inner = model.lambda1 * model.A**e / delta**e
        return model.prefactor * (delta / model.A) ** (-1.0 / model.alpha) * math.log1p(inner)
    if isinstance(model, FiniteEntropy):
        return model.log_cardinality
    raise TypeError(f"unknown entropy model {type(model).__name__}")


# ---------------------------------------------------------------------------
# sup distance, covers, quantization


def sup_distance(f, g, grid) -> float:
    """max over grid points of ||f(x) - g(x)||_2 (lower bound on the true sup)."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("grid must be nonempty")
    if grid.ndim == 1:
        grid = grid.reshape(-1, 1)
    d = grid.shape[1]
    fv = evaluate(f, grid, d)
    gv = evaluate(g, grid, d)
    return float(np.max(np.linalg.norm(fv - gv, axis=1)))


@dataclass(frozen=True)
class Cover:
    """A delta-cover: representative functions plus the certification grid."""

    scale: float
    members: tuple
    method: str
    grid: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.members)


@dataclass(frozen=True)
class Quantized:
    """Nearest cover element to a fitted model, with its index and distance."""

    model: object
    index: int
    distance: float

    def __call__(self, x):
        return self.model(x)


def _uniform_grid(lo: float, hi: float, max_spacing: float) -> np.ndarray:
    segments = max(int(math.ceil((hi - lo) / max_spacing)), 1)
    return np.linspace(lo, hi, segments + 1)


def random_lipschitz_member(L: float, B: float, value_range, rng, n_nodes: int = 129):
    """Random member of the Lipschitz class, built from bounded increments."""
    lo, hi = value_range
    xs = np.linspace(-B, B, n_nodes)
    h = xs[1] - xs[0] if n_nodes > 1 else 0.0
    vals = np.empty(n_nodes)
    vals[0] = rng.uniform(lo, hi)
    steps = rng.uniform(-L * h, L * h, size=n_nodes - 1)
    vals[1:] = vals[0] + np.cumsum(steps)
    # clipping is a contraction, so the clipped path stays L-Lipschitz
    vals = np.clip(vals, lo, hi)
    return Tabulated1D(xs, vals)


def _certify_cover(cover: Cover, sampler, n_samples: int, seed: int):
    rng = substream(seed, "cover", "certify")
    worst = 0.0
    for _ in range(n_samples):
        member = sampler(rng)
        dist = min(sup_distance(member, g, cover.grid) for g in cover.members)
        worst = max(worst, dist)
    if worst > cover.scale * (1 + 1e-9):
        raise CoverCertificationError(
            f"cover at scale {cover.scale} misses a sampled member by {worst:.6f}")
    return worst


def build_cover_lipschitz1d(L: float, B: float, value_range, delta: float,
                            size_cap: int = COVER_SIZE_CAP, certify: bool = True,
                            n_certify: int = 100, seed: int = 0) -> Cover:
    """Enumerated piecewise-linear cover of the scalar Lipschitz class.

    Nodes live on a grid of [-B, B] with spacing <= delta, node values on a
    grid of the value range with spacing <= delta, and adjacent node values
    move by at most L * (node spacing).  The full admissible set is
    enumerated; a validation grid 10x finer than the node grid certifies the
    covering radius on randomly sampled class members.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    lo, hi = map(float, value_range)
    if hi < lo:
        raise ValueError("empty value range")
    width = hi - lo
    fine = _uniform_grid(-B, B, max(delta, 2 * B / 64) / 10.0)

    if delta >= width:
        members = (Tabulated1D(np.array([-B, B]), np.array([(lo + hi) / 2] * 2)),)
        cover = Cover(scale=delta, members=members, method="lipschitz-midpoint", grid=fine)
        if certify:
            _certify_cover(cover, lambda rng: random_lipschitz_member(L, B, (lo, hi), rng),
                           n_certify, seed)
        return cover

    xs = _uniform_grid(-B, B, delta)
    h = xs[1] - xs[0]
    # value-grid spacing at most min(delta, L*h) so steps can track steep members
    values = _uniform_grid(lo, hi, min(delta, L * h) if L * h > 0 else delta)
    g = values[1] - values[0]
    n_values = values.size
    max_step = int(math.floor(L * h / g + 1e-9))

    est_size = n_values * (2 * max_step + 1) ** (xs.size - 1)
    if est_size > size_cap:
        raise CoverSizeError(
            f"Lipschitz cover would need up to {est_size} elements; cap is {size_cap}")

    paths = np.arange(n_values, dtype=np.int64).reshape(-1, 1)
    for _ in range(xs.size - 1):
        last = paths[:, -1]
        new = []
        for step in range(-max_step, max_step + 1):
            nxt = last + step
            ok = (nxt >= 0) & (nxt < n_values)
            new.append(np.hstack([paths[ok], nxt[ok].reshape(-1, 1)]))
        paths = np.vstack(new)
        if paths.shape[0] > size_cap:
            raise CoverSizeError(
                f"Lipschitz cover exceeded the cap of {size_cap} during enumeration")
    # canonical lexicographic order for reproducible tie-breaking downstream
    paths = paths[np.lexsort(paths.T[::-1])]

    members = tuple(Tabulated1D(xs, values[row]) for row in paths)
    cover = Cover(scale=delta, members=members, method="lipschitz-staircase", grid=fine)
    if certify:
        _certify_cover(cover, lambda rng: random_lipschitz_member(L, B, (lo, hi), rng),
                       n_certify, seed)
    return cover


def random_glm_member(C: float, d_x: int, link, rng) -> GLMMap:
    """Random matrix in the Frobenius C-ball, lifted through the link."""
    A = rng.standard_normal((d_x, d_x))
    norm = np.linalg.norm(A)
    radius = C * rng.uniform() ** (1.0 / d_x**2)
    return GLMMap(A / max(norm, 1e-300) * radius, link)


def build_cover_glm(d_x: int, C: float, B: float, link, delta: float,
                    size_cap: int = COVER_SIZE_CAP, certify: bool = True,
                    n_certify: int = 100, seed: int = 0) -> Cover:
    """Frobenius-ball lattice cover of the GLM class, lifted through the link.

    Coordinates of the matrix live on a lattice of spacing delta / B; a
    Frobenius perturbation of size delta / B moves the lifted map by at most
    delta in sup norm over the state ball of radius B.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if C < 0 or B <= 0:
        raise ValueError("C must be nonnegative and B positive")
    link = get_link(link)
    rng_grid = substream(seed, "cover", "glm-grid")
    n_grid_pts = max(64, 32 * d_x)
    grid = UniformBallInit().draw(rng_grid, n_grid_pts, d_x, B)

    if C == 0.0:
        members = (GLMMap(np.zeros((d_x, d_x)), link),)
        return Cover(scale=delta, members=members, method="glm-lattice", grid=grid)

    spacing = delta / B
    k_max = int(math.ceil(C / spacing))
    per_coord = 2 * k_max + 1
    n_coords = d_x * d_x
    est_size = per_coord**n_coords
    if est_size > size_cap:
        raise CoverSizeError(
            f"GLM cover lattice would need {est_size} candidate points "
            f"({per_coord} per coordinate over {n_coords} coordinates); cap is {size_cap}")

    axis = spacing * np.arange(-k_max, k_max + 1)
    mesh = np.stack(np.meshgrid(*([axis] * n_coords), indexing="ij"), axis=-1)
    flat = mesh.reshape(-1, n_coords)
    norms = np.linalg.norm(flat, axis=1)
    keep = flat[norms <= C + spacing * math.sqrt(n_coords) / 2 + 1e-12]
    keep_norms = np.linalg.norm(keep, axis=1)
    scale = np.minimum(1.0, C / np.maximum(keep_norms, 1e-300))
    projected = keep * scale[:, None]
    members = tuple(GLMMap(row.reshape(d_x, d_x), link) for row in projected)
    cover = Cover(scale=delta, members=members, method="glm-lattice", grid=grid)
    if certify:
        _certify_cover(cover, lambda rng: random_glm_member(C, d_x, link, rng),
                       n_certify, seed)
    return cover


def quantize(fitted, cover: Cover, grid=None) -> Quantized:
    """Nearest cover element to a fitted model in sup-grid distance.

    Ties break toward the lowest cover index so quantization is reproducible.
    """
    if len(cover.members) == 0:
        raise ValueError("cover must be nonempty")
    grid = cover.grid if grid is None else np.asarray(grid, dtype=float)
    distances = np.array([sup_distance(fitted, g, grid) for g in cover.members])
    idx = int(np.argmin(distances))  # first minimizer wins ties
    return Quantized(model=cover.members[idx], index=idx, distance=float(distances[idx]))


def save_cover(cover: Cover, path) -> None:
    """Serialize a cover as plain columnar text: grid coordinates then members."""
    grid = np.asarray(cover.grid, dtype=float)
    if grid.ndim == 1:
        grid = grid.reshape(-1, 1)
    cols = [grid[:, j] for j in range(grid.shape[1])]
    names = [f"x{j}" for j in range(grid.shape[1])]
    for i, member in enumerate(cover.members):
        vals = evaluate(member, grid, grid.shape[1])
        for j in range(vals.shape[1]):
            cols.append(vals[:, j])
            names.append(f"member{i}_y{j}" if vals.shape[1] > 1 else f"member{i}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# cover scale: {cover.scale!r}\n")
        fh.write(f"# method: {cover.method}\n")
        fh.write(f"# members: {len(cover.members)}\n")
        fh.write(" ".join(names) + "\n")
        for r in range(grid.shape[0]):
            fh.write(" ".join(repr(float(c[r])) for c in cols) + "\n")
