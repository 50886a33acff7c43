"""Scaled kernel Gram matrix, its unit-norm factorization, and the
augmented input vectors for the balancing walk.

The Gram couples the cell's data points (scaled by sqrt(3)) with the
verification grid points (scaled by 1/sqrt(3)); its factor columns are
unit vectors whose inner products reproduce the matrix. Only data points
receive augmented walk inputs; grid columns exist as audit witnesses.

Memory: the matrix for n data and g grid points is one (n + g)^2 float64
array (plus the factorization's working set of the same order); callers
cap g via the schedule's grid budget.
"""

import math
from dataclasses import dataclass

import numpy as np

from .kernel import as_points

__all__ = ["GramFactor", "build_gram", "psd_factor", "augment", "augmented_norm_bound"]

# Eigenvalues in [-EIG_TOL * lambda_max, 0] are numerical noise and clamp
# to zero; anything more negative signals a corrupted input matrix.
EIG_TOL = 1e-8

_BALL_SLACK = 1e-9


def build_gram(points, grids=()):
    """Assemble the scaled kernel Gram matrix for a centered cell.

    Args:
      points: (n, d) data points, required to lie in the unit sup-norm ball
        (cells are centered before calling).
      grids: iterable of Grid descriptors or (g_i, d) arrays contributing
        witness points.

    Returns:
      (N, N) symmetric matrix with unit diagonal, N = n + total grid points,
      ordered data first. Entries are exp(-||a - b||^2) after scaling data
      points by sqrt(3) and grid points by 1/sqrt(3); in particular the
      data/data block is exp(-3 ||p - q||^2).
    """
    pts = as_points(points)
    if np.abs(pts).max() > 1.0 + _BALL_SLACK:
        raise ValueError("data point outside the unit sup-norm ball; center the cell first")
    blocks = [np.sqrt(3.0) * pts]
    for g in grids:
        gp = g.points() if hasattr(g, "points") and callable(getattr(g, "points")) else np.asarray(g, dtype=np.float64)
        if gp.ndim != 2 or gp.shape[1] != pts.shape[1]:
            raise ValueError("grid points must be a 2-D array matching the data dimension")
        if gp.shape[0]:
            blocks.append(gp / np.sqrt(3.0))
    scaled = np.concatenate(blocks, axis=0)
    sq = np.maximum(_pairwise_sq(scaled), 0.0)
    m = np.exp(-sq)
    np.fill_diagonal(m, 1.0)
    return m


def _pairwise_sq(rows):
    diff = rows[:, None, :] - rows[None, :, :]
    return np.einsum("abd,abd->ab", diff, diff)


@dataclass(frozen=True)
class GramFactor:
    """Unit-norm column factor U of a Gram matrix: U^T U reproduces M.

    columns has shape (dim_m, N) with one column per Gram row; the first
    n_data columns belong to data points, the rest to grid witnesses.
    """

    columns: np.ndarray
    n_data: int

    @property
    def dim_m(self):
        return self.columns.shape[0]

    @property
    def n_columns(self):
        return self.columns.shape[1]

    @property
    def data_columns(self):
        return self.columns[:, : self.n_data]

    @property
    def grid_columns(self):
        return self.columns[:, self.n_data:]

    def labels(self):
        return ["data"] * self.n_data + ["grid"] * (self.n_columns - self.n_data)

    def gram(self):
        """Reconstruct the inner-product matrix of the columns."""
        return self.columns.T @ self.columns


def psd_factor(matrix, n_data=None):
    """Factor a symmetric unit-diagonal PSD matrix into unit-norm columns.

    Uses a symmetric eigendecomposition with eigenvalues below the noise
    floor (1e-12 of the largest) clamped to zero; columns are
    sqrt(Lambda) Q^T restricted to the remaining eigenvalues, so the factor
    dimension is the numerical rank. Pivoted triangular factorizations fail
    on the exact rank deficiency that duplicate points and dense grids
    produce; clamping does not, and the clamp perturbs reconstructed inner
    products by at most ~1e-12 * lambda_max entrywise.

    Raises ValueError when an eigenvalue is below -EIG_TOL * lambda_max,
    which means the input was not (numerically) positive semidefinite.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(m, m.T, atol=1e-12):
        raise ValueError("matrix must be symmetric")
    w, q = np.linalg.eigh(m)
    lam_max = max(float(w[-1]), 0.0)
    if float(w[0]) < -EIG_TOL * max(lam_max, 1.0):
        raise ValueError(
            f"matrix is not positive semidefinite: min eigenvalue {w[0]:.3e} "
            f"vs max {lam_max:.3e}"
        )
    keep = w > 1e-12 * max(lam_max, 1.0)
    cols = (q[:, keep] * np.sqrt(w[keep])).T
    n = m.shape[0] if n_data is None else int(n_data)
    if not 0 <= n <= m.shape[0]:
        raise ValueError("n_data out of range")
    return GramFactor(columns=np.ascontiguousarray(cols), n_data=n)


def augmented_norm_bound(p_sq_norm, d):
    """Norm of the augmented vector for a point with ||p||^2 = p_sq_norm."""
    return math.sqrt((1.0 + math.exp(4.0 * p_sq_norm)) / (1.0 + math.exp(4.0 * d)))


def augment(factor, points, d=None):
    """Walk input vectors: rows (1; v_p * e^(2 ||p||^2)) / sqrt(1 + e^(4d)).

    v_p is the data column of `factor` for point p. Each row has euclidean
    norm sqrt((1 + e^(4||p||^2)) / (1 + e^(4d))) <= 1 for p in the unit
    sup-norm ball, which is the walk's norm precondition.

    Returns an (n, dim_m + 1) array, one row per data point.
    """
    pts = as_points(points)
    if d is None:
        d = pts.shape[1]
    if factor.n_data != pts.shape[0]:
        raise ValueError("factor data columns do not match the point count")
    sqn = np.einsum("nd,nd->n", pts, pts)
    weights = np.exp(2.0 * sqn)
    scale = 1.0 / math.sqrt(1.0 + math.exp(4.0 * d))
    out = np.empty((pts.shape[0], factor.dim_m + 1), dtype=np.float64)
    out[:, 0] = scale
    out[:, 1:] = (factor.data_columns * weights).T * scale
    return out
