import math

import numpy as np
import pytest

from kdecoreset.decomp import augment, build_gram, psd_factor
from kdecoreset.schedule import Grid, build_schedule

import naive


def test_gram_diagonal_is_one():
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, size=(6, 2))
    m = build_gram(pts)
    assert np.array_equal(np.diag(m), np.ones(6))


def test_gram_data_block_scaling():
    # Data/data entries are exp(-3 ||p - q||^2).
    pts = np.array([[0.0, 0.0], [0.5, -0.25]])
    m = build_gram(pts)
    d2 = 0.5**2 + 0.25**2
    assert m[0, 1] == pytest.approx(math.exp(-3 * d2), rel=1e-14)


def test_gram_grid_coincidence():
    # Grid point s = 3p gives a mixed entry of exactly 1.
    p = np.array([[0.25]])
    m = build_gram(p, [np.array([[0.75]])])
    assert m[0, 1] == pytest.approx(1.0, rel=1e-14)


def test_gram_matches_naive_four_cases():
    rng = np.random.default_rng(1)
    pts = rng.uniform(-1, 1, size=(3, 1))
    grid_pts = rng.uniform(-4, 4, size=(4, 1))
    m = build_gram(pts, [grid_pts])
    labels = [True] * 3 + [False] * 4
    rows = np.concatenate([pts, grid_pts])
    for a in range(7):
        for b in range(7):
            expected = 1.0 if a == b else naive.gram_entry(
                rows[a], rows[b], labels[a], labels[b])
            assert m[a, b] == pytest.approx(expected, abs=1e-15)


def test_gram_rejects_point_outside_ball():
    with pytest.raises(ValueError, match="unit sup-norm ball"):
        build_gram(np.array([[1.5, 0.0]]))


def test_psd_factor_identity_orthonormal():
    m = np.eye(5)
    f = psd_factor(m)
    assert np.allclose(f.columns.T @ f.columns, m, atol=1e-12)
    norms = np.linalg.norm(f.columns, axis=0)
    assert np.allclose(norms, 1.0, atol=1e-12)


def test_psd_factor_rank_one():
    m = np.ones((2, 2))
    f = psd_factor(m)
    assert f.dim_m == 1
    assert np.allclose(f.columns[:, 0], f.columns[:, 1], atol=1e-12)
    assert np.linalg.norm(f.columns[:, 0]) == pytest.approx(1.0, abs=1e-12)


def test_psd_factor_random_gaussian_gram():
    rng = np.random.default_rng(2)
    pts = rng.uniform(-1, 1, size=(10, 2))
    m = build_gram(pts)
    f = psd_factor(m)
    recon = f.gram()
    assert np.abs(recon - m).max() <= 1e-8
    assert np.abs(np.linalg.norm(f.columns, axis=0) - 1.0).max() <= 1e-6


def test_psd_factor_rejects_indefinite():
    m = np.array([[1.0, 2.0], [2.0, 1.0]])  # eigenvalues 3 and -1
    with pytest.raises(ValueError, match="not positive semidefinite"):
        psd_factor(m)


def test_psd_factor_labels():
    pts = np.random.default_rng(3).uniform(-1, 1, size=(4, 1))
    g = Grid(width=1.0, radius=2.0, dim=1)
    m = build_gram(pts, [g])
    f = psd_factor(m, n_data=4)
    assert f.labels() == ["data"] * 4 + ["grid"] * g.count()
    assert f.data_columns.shape[1] == 4
    assert f.grid_columns.shape[1] == g.count()


def test_augment_origin():
    d = 2
    pts = np.array([[0.0, 0.0]])
    f = psd_factor(build_gram(pts))
    vecs = augment(f, pts, d)
    scale = 1.0 / math.sqrt(1.0 + math.exp(4.0 * d))
    assert vecs[0, 0] == pytest.approx(scale, rel=1e-14)
    assert np.linalg.norm(vecs[0]) == pytest.approx(math.sqrt(2.0) * scale, rel=1e-12)


def test_augment_boundary_point_saturates():
    # d = 1 and ||p||^2 = 1: the normalizer cancels exactly.
    pts = np.array([[1.0]])
    f = psd_factor(build_gram(pts))
    vecs = augment(f, pts, 1)
    assert np.linalg.norm(vecs[0]) == pytest.approx(1.0, rel=1e-12)


def test_augment_inner_products_closed_form():
    rng = np.random.default_rng(4)
    d = 2
    pts = rng.uniform(-1, 1, size=(8, d))
    f = psd_factor(build_gram(pts))
    vecs = augment(f, pts, d)
    denom = 1.0 + math.exp(4.0 * d)
    for a in range(8):
        for b in range(8):
            dd = pts[a] - pts[b]
            expected = (1.0 + math.exp(2 * pts[a] @ pts[a] + 2 * pts[b] @ pts[b])
                        * math.exp(-3 * dd @ dd)) / denom
            assert vecs[a] @ vecs[b] == pytest.approx(expected, abs=1e-9)


def test_augment_norm_bound_and_duplicates():
    rng = np.random.default_rng(5)
    pts = rng.uniform(-1, 1, size=(12, 3))
    pts[7] = pts[3]  # duplicate
    f = psd_factor(build_gram(pts))
    vecs = augment(f, pts, 3)
    norms = np.linalg.norm(vecs, axis=1)
    assert norms.max() <= 1.0 + 1e-12
    assert np.allclose(f.columns[:, 3], f.columns[:, 7], atol=1e-7)
    assert np.allclose(vecs[3], vecs[7], atol=1e-7)


def test_gram_with_schedule_grids_roundtrip():
    rng = np.random.default_rng(6)
    pts = rng.uniform(-1, 1, size=(30, 2))
    sch = build_schedule(30, 2)
    grids = [g.coarsened(200) for g in sch.grids]
    m = build_gram(pts, grids)
    f = psd_factor(m, n_data=30)
    assert np.abs(f.gram() - m).max() <= 1e-8
    assert np.abs(np.linalg.norm(f.columns, axis=0) - 1.0).max() <= 1e-6
