"""Randomized vector balancing with subgaussian projections.

Given vectors of euclidean norm at most 1, the walk maintains a fractional
coloring in [-1, 1]^n. Each step picks the unfrozen coordinate of highest
priority as the pivot, moves along the direction that is 1 at the pivot and
least-squares optimal (minimum ||V u||) over the remaining unfrozen
coordinates, and steps to whichever box boundary the two endpoint magnitudes
allow, choosing between them with the probability that makes the update a
martingale. Coordinates that reach +-1 freeze; the walk ends when all are
frozen. Projections onto every fixed unit direction of the signed sum are
then subgaussian.

Directions are computed in feature space: with W the ridge-regularized
second-moment matrix of the unfrozen vectors, the step direction is
(e_pivot - V W^-1 v_pivot) rescaled, and freezing a coordinate is a rank-one
downdate of W and its inverse. The inverse is rebuilt from W every 64
freezes to control drift. A single walk is sequential by construction;
distinct walks with independent seeds can run concurrently.

Randomness comes from numpy's Philox counter-based generator, seeded and
splittable; the same (vectors, seed) always reproduce the same coloring.
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["WalkOutput", "gsw_color", "subgaussian_audit", "wilson_interval"]

NORM_SLACK = 1e-9
# Tikhonov ridge on the feature second-moment matrix; keeps duplicate and
# numerically dependent vectors solvable without changing directions beyond
# float noise.
_RIDGE = 1e-10
# Freezes between full re-inversions of the maintained inverse.
_REFRESH_EVERY = 64
_FREEZE_BAND = 1e-12


@dataclass(frozen=True)
class WalkOutput:
    """Signs in {-1, +1} per input vector plus the step count diagnostic."""

    signs: np.ndarray
    steps: int


def _as_vectors(vectors):
    v = np.asarray(vectors, dtype=np.float64)
    if v.ndim == 1:
        v = v.reshape(-1, 1)
    if v.ndim != 2:
        raise ValueError("walk input must be an (n, m) array of row vectors")
    norms_sq = np.einsum("nm,nm->n", v, v)
    if v.shape[0] and norms_sq.max() > (1.0 + NORM_SLACK) ** 2:
        raise ValueError(
            f"walk input norm {math.sqrt(norms_sq.max()):.12f} exceeds 1"
        )
    return v


def _rng_from(seed):
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def _sm_downdate(w_inv, v):
    """Inverse of W - v v^T given W^-1 (Sherman-Morrison)."""
    z = w_inv @ v
    denom = 1.0 - float(v @ z)
    if denom < 1e-12:
        return None  # numerically singular; caller refreshes from W
    w_inv += np.outer(z, z) / denom
    return w_inv


def gsw_color(vectors, seed, priorities=None):
    """Color row vectors of norm <= 1 with signs whose signed sum has
    subgaussian projections along every fixed unit direction.

    Args:
      vectors: (n, m) array of input row vectors, euclidean norm <= 1.
      seed: integer or numpy SeedSequence; fixed (vectors, seed) gives a
        deterministic output.
      priorities: optional length-n array; the pivot is always the unfrozen
        coordinate of highest priority (default: the index itself, so the
        pivot is the highest-index unfrozen coordinate). The walk is computed
        in priority order internally, which makes consistent permutations of
        vectors and priorities permute the output signs exactly.

    Returns:
      WalkOutput with signs (int64, each exactly +-1) and the number of
      walk steps taken (at most n; asserted <= 2n).
    """
    v = _as_vectors(vectors)
    n = v.shape[0]
    if n == 0:
        return WalkOutput(signs=np.empty(0, dtype=np.int64), steps=0)
    if priorities is None:
        order = np.arange(n)
    else:
        pr = np.asarray(priorities)
        if pr.shape != (n,):
            raise ValueError("priorities must have one entry per vector")
        order = np.argsort(pr, kind="stable")
    rng = _rng_from(seed)
    internal = _walk(v[order], rng)
    signs = np.empty(n, dtype=np.int64)
    signs[order] = internal.signs
    return WalkOutput(signs=signs, steps=internal.steps)


def _walk(v, rng):
    """Walk core. Active coordinates live in positions [0, k) of the working
    arrays; freezing swaps a position with k - 1 and shrinks k, so removals
    never copy whole matrices. `ids` maps positions to internal (priority)
    order; the pivot is the active position of largest id."""
    n, m = v.shape
    vact = np.array(v)                      # rows permuted in place
    ids = np.arange(n)
    x = np.zeros(n)                         # fractional coloring, by position
    signs = np.zeros(n, dtype=np.int64)     # by internal id
    w = vact.T @ vact + _RIDGE * np.eye(m)  # second moment of active rows
    w_inv = np.linalg.inv(w)
    k = n
    since_refresh = 0
    steps = 0
    while k > 0:
        steps += 1
        if steps > 2 * n:
            raise RuntimeError("balancing walk failed to terminate within 2n steps")
        if w_inv is None:
            w_inv = np.linalg.inv(w)
            since_refresh = 0
        ppos = int(np.argmax(ids[:k]))
        vp = vact[ppos]
        z = w_inv @ vp
        denom = 1.0 - float(vp @ z)
        if denom < 1e-9 and since_refresh:
            w_inv = np.linalg.inv(w)
            since_refresh = 0
            z = w_inv @ vp
            denom = 1.0 - float(vp @ z)
        # Constrained least squares via the feature-space identity:
        # u = (e_pivot - V_active W^-1 v_pivot) / (1 - v_pivot^T W^-1 v_pivot).
        u = (vact[:k] @ z) / -max(denom, 1e-12)
        u[ppos] = 1.0
        xa = x[:k]
        pos = u > 0.0
        neg = u < 0.0
        d_plus = np.inf
        d_minus = np.inf
        if pos.any():
            d_plus = ((1.0 - xa[pos]) / u[pos]).min()
            d_minus = ((1.0 + xa[pos]) / u[pos]).min()
        if neg.any():
            d_plus = min(d_plus, ((-1.0 - xa[neg]) / u[neg]).min())
            d_minus = min(d_minus, ((xa[neg] - 1.0) / u[neg]).min())
        # Martingale step: E[delta] = 0 under these endpoint probabilities.
        if rng.random() * (d_plus + d_minus) < d_minus:
            xa += d_plus * u
        else:
            xa -= d_minus * u
        hit = np.abs(xa) >= 1.0 - _FREEZE_BAND
        if not hit.any():
            # Float safety net: freeze the coordinate closest to the boundary.
            hit[np.argmax(np.abs(xa))] = True
        for posn in np.flatnonzero(hit)[::-1]:
            posn = int(posn)
            signs[ids[posn]] = 1 if xa[posn] > 0.0 else -1
            last = k - 1
            frozen_v = vact[posn].copy()
            if posn != last:
                vact[posn] = vact[last]
                ids[posn] = ids[last]
                x[posn] = x[last]
            k = last
            w -= np.outer(frozen_v, frozen_v)
            if w_inv is not None:
                w_inv = _sm_downdate(w_inv, frozen_v)
            since_refresh += 1
        if since_refresh >= _REFRESH_EVERY:
            w_inv = None
    return WalkOutput(signs=signs, steps=steps)


def wilson_interval(count, n, z=1.96):
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("sample count must be positive")
    p = count / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2.0 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def subgaussian_audit(vectors, trials, alphas, seed=0, n_directions=50, directions=None):
    """Empirical tail table for |<X, theta>| over repeated walks.

    Runs `trials` independently seeded walks on `vectors`, projects each
    signed sum onto fixed unit directions, and tabulates the exceedance
    frequency per alpha with 95% Wilson confidence intervals.

    Args:
      vectors: (n, m) walk input.
      trials: number of walks (>= 100).
      alphas: iterable of thresholds.
      seed: root seed; direction and walk seeds are split from it.
      n_directions: number of random unit directions when none are given.
      directions: optional (m, k) array of unit direction columns.

    Returns:
      List of rows, one per alpha:
      {alpha, count, samples, frequency, wilson_low, wilson_high}.
    """
    v = _as_vectors(vectors)
    if trials < 100:
        raise ValueError("audit needs at least 100 trials")
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    dir_seed, *walk_seeds = root.spawn(trials + 1)
    if directions is None:
        dir_rng = np.random.Generator(np.random.Philox(dir_seed))
        directions = dir_rng.standard_normal((v.shape[1], n_directions))
        directions /= np.linalg.norm(directions, axis=0, keepdims=True)
    else:
        directions = np.asarray(directions, dtype=np.float64)
    xs = np.empty((trials, v.shape[1]))
    for t in range(trials):
        out = gsw_color(v, walk_seeds[t])
        if not np.all(np.abs(out.signs) == 1):
            raise RuntimeError("walk returned a non-sign output")
        xs[t] = out.signs @ v
    samples = np.abs(xs @ directions).ravel()
    table = []
    for alpha in alphas:
        count = int((samples > alpha).sum())
        lo, hi = wilson_interval(count, samples.size)
        table.append({
            "alpha": float(alpha),
            "count": count,
            "samples": int(samples.size),
            "frequency": count / samples.size,
            "wilson_low": lo,
            "wilson_high": hi,
        })
    return table
