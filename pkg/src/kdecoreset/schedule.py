"""Verification schedule: iterated-log level count, shrinking radii,
bounded lattice grids, and per-level discrepancy thresholds.

A schedule for a cell of n points consists of the decreasing sequence
n_0 = log^2 n, n_1 = sqrt(3 log n) + 3, n_{i+1} = sqrt(3 * 2^(L-i) * log n_i)
down to level L = ell(n), one lattice grid per level (cell width
1/(c0 * n_i), radius n_{i+1}), and threshold constants. Logs are natural.

Schedules are immutable after construction and safe to share across threads.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "N_MIN",
    "Constants",
    "default_constants",
    "ilog",
    "ell",
    "n_sequence",
    "Grid",
    "GridSchedule",
    "build_schedule",
    "threshold_at",
]

# Below this cell size the multi-scale recursion degenerates (log^2 n is
# smaller than the cell's own scale) and a single fallback grid is used.
N_MIN = 16

# Balance-coordinate weight of the walk input is 1/sqrt(1 + e^(4d)); the
# calibrated c1/c_big defaults scale the d = 1 values by the same factor so
# the accept/reject behaviour of the verifier is dimension-independent.
_BASE_C1 = 10.0


def _dim_scale(d):
    return math.sqrt((1.0 + math.exp(4.0 * d)) / (1.0 + math.exp(4.0)))


@dataclass(frozen=True)
class Constants:
    """Threshold constants for a schedule.

    c0 sets the grid resolution, c1 the per-level discrepancy thresholds,
    c_big the cap on |sum sigma|. grid_budget caps the number of enumerated
    points per verification grid (None = enumerate the literal lattice).
    """

    c0: float
    c1: float
    c_big: float
    strict: bool = False
    grid_budget: int | None = 4096

    def replace(self, **kw):
        return replace(self, **kw)


def default_constants(d, c0=None, c1=None, c_big=None, strict=False, grid_budget=4096):
    """Default constants for dimension d.

    The theory only pins these up to "sufficiently large"; the defaults are
    calibrated so that accepted colorings remain certified (the Las Vegas
    check is exact) while retry rates stay near 1 for d <= 3. Strict mode
    restores the inequalities the proofs ask of the constants
    (c1 > c0, c_big >= max(e^(2 d^2), 4 c1 + 7)) and enumerates grids at
    the literal lattice width, which is impractically dense for d >= 2.
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    scale = _dim_scale(d)
    c0 = 20.0 * d if c0 is None else float(c0)
    c1 = _BASE_C1 * scale if c1 is None else float(c1)
    c_big = 4.0 * _BASE_C1 * scale if c_big is None else float(c_big)
    if strict:
        c1 = max(c1, 2.0 * c0)
        c_big = max(c_big, math.exp(2.0 * d * d), 4.0 * c1 + 7.0)
        grid_budget = None
    return Constants(c0=c0, c1=c1, c_big=c_big, strict=strict, grid_budget=grid_budget)


def ilog(k, n):
    """Iterated natural logarithm: log applied k times to n.

    Returns None (the "undefined-negative" sentinel) when an intermediate
    value drops to <= 0 before the k applications complete, rather than
    raising: callers treat that as "the iteration has bottomed out".
    """
    if k < 0:
        raise ValueError("k must be a nonnegative integer")
    v = float(n)
    for _ in range(k):
        if v <= 0.0:
            return None
        v = math.log(v)
    return v


def ell(n):
    """Level count: max(k - 3, 0) for the smallest k with ilog(k, n) < 0."""
    if n < 2:
        raise ValueError("ell(n) requires n >= 2")
    v = float(n)
    k = 0
    while v >= 0.0:
        v = math.log(v) if v > 0.0 else -math.inf
        k += 1
    return max(k - 3, 0)


def n_sequence(n, levels=None):
    """The decreasing sequence [n_0, ..., n_L] for a cell of n points.

    n_0 = log^2 n, n_1 = sqrt(3 log n) + 3, and
    n_{i+1} = sqrt(3 * 2^(L - i) * log n_i) for i = 1, ..., L - 1.
    Raises for n below N_MIN, where the recursion degenerates; callers fall
    back to the single-grid schedule (see build_schedule).
    """
    if n < N_MIN:
        raise ValueError(f"n_sequence: n = {n} is below the degenerate threshold {N_MIN}")
    L = max(ell(n), 1) if levels is None else levels
    logn = math.log(n)
    seq = [logn * logn, math.sqrt(3.0 * logn) + 3.0]
    for i in range(1, L):
        seq.append(math.sqrt(3.0 * 2.0 ** (L - i) * math.log(seq[i])))
    return seq


@dataclass(frozen=True)
class Grid:
    """A bounded lattice grid: {center + width * (i_1, ..., i_d)} with
    |width * i_j| <= radius for integer i_j."""

    width: float
    radius: float
    dim: int
    center: tuple = None

    def __post_init__(self):
        if self.width <= 0 or self.radius <= 0 or self.dim < 1:
            raise ValueError("grid width, radius and dim must be positive")
        c = (0.0,) * self.dim if self.center is None else tuple(float(v) for v in self.center)
        if len(c) != self.dim:
            raise ValueError("grid center has wrong dimension")
        object.__setattr__(self, "center", c)

    def axis_steps(self):
        # Largest integer k with k * width <= radius; the 1e-9 slop absorbs
        # float division error when radius is an exact multiple of width.
        return int(math.floor(self.radius / self.width + 1e-9))

    def count(self):
        """Closed-form point count (2 * axis_steps + 1)^d."""
        return (2 * self.axis_steps() + 1) ** self.dim

    def points(self):
        """Enumerate the grid as an (N, d) array, lexicographic in the
        integer indices; deterministic across calls."""
        k = self.axis_steps()
        offs = self.width * np.arange(-k, k + 1, dtype=np.float64)
        axes = [offs + self.center[j] for j in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, self.dim)

    def coarsened(self, max_points):
        """The sparsest-needed integer-stride sublattice with at most
        max_points points. Coarsened points are a subset of this grid's
        points, so every checked point is a genuine lattice point."""
        if max_points is None or self.count() <= max_points:
            return self
        per_axis = max(1, int(max_points ** (1.0 / self.dim)))
        stride = max(1, int(math.ceil((2 * self.axis_steps() + 1) / per_axis)))
        g = Grid(self.width * stride, self.radius, self.dim, self.center)
        while g.count() > max_points:
            stride += 1
            g = Grid(self.width * stride, self.radius, self.dim, self.center)
        return g


@dataclass(frozen=True)
class GridSchedule:
    """Grids and thresholds for one cell. seq has length ell + 1; grids has
    length ell; d_seq[i - 1] = c_big * (5/4) * (1 - 5^-i) and
    i_seq[i - 1] = 1/3 + (1/3) * (1 - 2^-(ell - i)) for i = 1..ell."""

    n: int
    dim: int
    ell: int
    seq: tuple
    constants: Constants
    grids: tuple
    degenerate: bool = False

    @property
    def c0(self):
        return self.constants.c0

    @property
    def c1(self):
        return self.constants.c1

    @property
    def c_big(self):
        return self.constants.c_big

    @property
    def d_seq(self):
        return tuple(self.c_big * 1.25 * (1.0 - 5.0 ** (-i)) for i in range(1, self.ell + 1))

    @property
    def i_seq(self):
        return tuple(1.0 / 3.0 + (1.0 - 2.0 ** (-(self.ell - i))) / 3.0 for i in range(1, self.ell + 1))

    def verification_grids(self):
        """Per-level grids to enumerate during verification, coarsened to
        the constants' budget (strict mode enumerates the literal width)."""
        return tuple(g.coarsened(self.constants.grid_budget) for g in self.grids)


def build_schedule(n, d, constants=None):
    """Build the verification schedule for a cell of n points in R^d.

    For n below N_MIN the multi-scale sequence degenerates; the schedule
    falls back to a single grid of width 1/(c0 * max(n, N_MIN)) and radius
    sqrt(3 log max(n, N_MIN)) + 3, with seq = [max(n, N_MIN), radius].
    """
    if n < 1:
        raise ValueError("cell must contain at least one point")
    if d < 1:
        raise ValueError("dimension must be >= 1")
    cst = default_constants(d) if constants is None else constants
    if n < N_MIN:
        n_eff = float(N_MIN)
        radius = math.sqrt(3.0 * math.log(n_eff)) + 3.0
        grid = Grid(1.0 / (cst.c0 * n_eff), radius, d)
        return GridSchedule(n=n, dim=d, ell=1, seq=(n_eff, radius), constants=cst,
                            grids=(grid,), degenerate=True)
    L = max(ell(n), 1)
    seq = n_sequence(n, levels=L)
    grids = tuple(Grid(1.0 / (cst.c0 * seq[i]), seq[i + 1], d) for i in range(L))
    return GridSchedule(n=n, dim=d, ell=L, seq=tuple(seq), constants=cst, grids=grids)


def threshold_at(schedule, level, s):
    """Level-i verification threshold at grid point s:
    c1 * n_{i+1} * exp(-(2/3) ||s - center||^2)."""
    if not 0 <= level < schedule.ell:
        raise ValueError(f"level {level} out of range for ell = {schedule.ell}")
    s = np.asarray(s, dtype=np.float64).reshape(-1)
    center = np.asarray(schedule.grids[level].center)
    off = s - center
    return float(schedule.c1 * schedule.seq[level + 1] * math.exp(-(2.0 / 3.0) * float(off @ off)))


def threshold_batch(schedule, level, points):
    """threshold_at over the rows of `points`, shape (N,)."""
    if not 0 <= level < schedule.ell:
        raise ValueError(f"level {level} out of range for ell = {schedule.ell}")
    pts = np.asarray(points, dtype=np.float64)
    off = pts - np.asarray(schedule.grids[level].center)[None, :]
    sq = np.einsum("nd,nd->n", off, off)
    return schedule.c1 * schedule.seq[level + 1] * np.exp(-(2.0 / 3.0) * sq)
