"""Gaussian kernel evaluation, KDE, and signed kernel discrepancy.

Points are rows of float64 arrays and the kernel bandwidth is fixed at 1,
i.e. k(x, y) = exp(-||x - y||^2). To use bandwidth h, rescale coordinates
by 1/h before calling into this module.

All functions are pure; they can be called concurrently from any number of
threads. Batched evaluations reduce with numpy's pairwise summation, so
results are reproducible for a fixed numpy build.
"""

import numpy as np

__all__ = [
    "PointSet",
    "as_point",
    "as_points",
    "as_coloring",
    "gauss",
    "kde",
    "kde_batch",
    "signed_discrepancy",
    "signed_discrepancy_batch",
]

# Cap on temporary floats per block in batched pairwise evaluations.
_BLOCK_ELEMS = 8_000_000


def as_point(x, dim=None):
    """Coerce x to a finite float64 vector, optionally checking its length."""
    p = np.asarray(x, dtype=np.float64).reshape(-1)
    if p.size == 0:
        raise ValueError("point must have at least one coordinate")
    if not np.all(np.isfinite(p)):
        raise ValueError("point has non-finite coordinates")
    if dim is not None and p.size != dim:
        raise ValueError(f"dimension mismatch: point has {p.size} coordinates, expected {dim}")
    return p


def as_points(points, dim=None, allow_empty=False):
    """Coerce to a finite float64 (n, d) array of points.

    Accepts a PointSet, an (n, d) array, or anything np.asarray handles.
    A 1-D input of length d is treated as a single point.
    """
    if isinstance(points, PointSet):
        arr = points.points
    else:
        arr = np.asarray(points, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1) if arr.size else arr.reshape(0, 1 if dim is None else dim)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D array of points, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError("point set has non-finite coordinates")
    if not allow_empty and arr.shape[0] == 0:
        raise ValueError("point set is empty")
    if dim is not None and arr.shape[0] and arr.shape[1] != dim:
        raise ValueError(f"dimension mismatch: points have dim {arr.shape[1]}, expected {dim}")
    return arr


def as_coloring(signs, n=None):
    """Coerce to an int64 vector with entries exactly -1 or +1."""
    s = np.asarray(signs)
    if s.ndim != 1:
        raise ValueError("coloring must be one-dimensional")
    out = s.astype(np.int64)
    if not np.array_equal(out, s) or not np.all(np.abs(out) == 1):
        raise ValueError("coloring entries must be exactly -1 or +1")
    if n is not None and out.size != n:
        raise ValueError(f"coloring length {out.size} does not match point count {n}")
    return out


class PointSet:
    """A finite set of points in R^d with a fixed dimension.

    Thin validated wrapper over an (n, d) float64 array. Non-finite
    coordinates are rejected at construction rather than silently dropped.
    """

    __slots__ = ("points",)

    def __init__(self, points, dim=None, allow_empty=False):
        arr = as_points(points, dim=dim, allow_empty=allow_empty)
        arr.setflags(write=False)
        self.points = arr

    @property
    def dim(self):
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    def __getitem__(self, idx):
        return self.points[idx]

    def subset(self, indices):
        return PointSet(self.points[np.asarray(indices, dtype=np.intp)], allow_empty=True)

    def __repr__(self):
        return f"PointSet(n={len(self)}, dim={self.dim})"


def _sq_dists(queries, points):
    """Squared euclidean distances, shape (q, n), by direct differences.

    Direct differencing (rather than the norm expansion) keeps each entry
    bit-compatible with a per-pair loop, which the naive oracles rely on.
    """
    diff = queries[:, None, :] - points[None, :, :]
    return np.einsum("qnd,qnd->qn", diff, diff)


def _blocked(queries, points, fn):
    """Apply fn(sq_dists_block) over query blocks and concatenate."""
    q, n = queries.shape[0], points.shape[0]
    block = max(1, _BLOCK_ELEMS // max(1, n * points.shape[1]))
    if q <= block:
        return fn(_sq_dists(queries, points))
    parts = [fn(_sq_dists(queries[i:i + block], points)) for i in range(0, q, block)]
    return np.concatenate(parts)


def gauss(x, y):
    """Gaussian kernel exp(-||x - y||^2); symmetric, in (0, 1], and 1 iff x == y."""
    p = as_point(x)
    q = as_point(y, dim=p.size)
    d = p - q
    return float(np.exp(-np.dot(d, d)))


def kde(points, x):
    """Kernel density estimate of a nonempty point set at query x.

    Returns mean_p exp(-||x - p||^2); numpy's pairwise summation keeps the
    reduction error far below the verification tolerances used downstream.
    """
    pts = as_points(points)
    q = as_point(x, dim=pts.shape[1])
    d = q[None, :] - pts
    return float(np.mean(np.exp(-np.einsum("nd,nd->n", d, d))))


def kde_batch(points, queries):
    """KDE of `points` at every query row; elementwise equal to kde().

    An empty query set yields an empty vector.
    """
    pts = as_points(points)
    qs = as_points(queries, dim=pts.shape[1], allow_empty=True)
    if qs.shape[0] == 0:
        return np.empty(0, dtype=np.float64)
    return _blocked(qs, pts, lambda sq: np.mean(np.exp(-sq), axis=1))


def signed_discrepancy(points, signs, x):
    """Signed discrepancy sum_p sigma(p) exp(-||x - p||^2).

    Flipping every sign negates the result exactly.
    """
    pts = as_points(points)
    sigma = as_coloring(signs, n=pts.shape[0])
    q = as_point(x, dim=pts.shape[1])
    d = q[None, :] - pts
    return float(np.sum(sigma * np.exp(-np.einsum("nd,nd->n", d, d))))


def signed_discrepancy_batch(points, signs, queries):
    """Signed discrepancy evaluated at every query row, shape (q,)."""
    pts = as_points(points)
    sigma = as_coloring(signs, n=pts.shape[0]).astype(np.float64)
    qs = as_points(queries, dim=pts.shape[1], allow_empty=True)
    if qs.shape[0] == 0:
        return np.empty(0, dtype=np.float64)
    return _blocked(qs, pts, lambda sq: np.exp(-sq) @ sigma)
