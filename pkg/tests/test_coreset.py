import numpy as np
import pytest

from kdecoreset.coreset import (
    build_coreset,
    halve,
    halve_indices,
    oracle_min_discrepancy,
    random_baseline,
)
from kdecoreset.kernel import kde, kde_batch, signed_discrepancy_batch
from kdecoreset.schedule import build_schedule, default_constants

import naive


def builder(n, d):
    return build_schedule(n, d, default_constants(d, grid_budget=400))


def test_halve_duplicate_pair():
    pts = np.array([[0.5, 0.5], [0.5, 0.5]])
    out = halve(pts, seed=0, schedule_builder=builder)
    assert out.shape == (1, 2)
    assert np.array_equal(out[0], pts[0])


def test_halve_single_cell_exact_half():
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, size=(1000, 2))
    out = halve(pts, seed=1, schedule_builder=builder)
    assert out.shape[0] == 500


def test_halve_kde_identity():
    # kde(P, x) - kde(P_plus, x) = -(1/n) D_{P,sigma}(x) at exact halving;
    # with odd leftovers the correction is bounded by imbalance / n.
    rng = np.random.default_rng(1)
    pts = rng.uniform(-1, 1, size=(200, 2))
    kept, signs, _ = halve_indices(pts, seed=2, schedule_builder=builder)
    n, m = len(pts), len(kept)
    queries = rng.uniform(-2, 2, size=(50, 2))
    disc = signed_discrepancy_batch(pts, signs, queries)
    lhs = kde_batch(pts, queries) - kde_batch(pts[kept], queries)
    if 2 * m == n:
        assert np.abs(lhs + disc / n).max() <= 1e-12
    assert np.abs(lhs + disc / n).max() <= abs(n - 2 * m) / n + 1e-12


def test_halve_size_deviation_bounded_by_cells():
    rng = np.random.default_rng(2)
    pts = rng.uniform(-6, 6, size=(400, 2))
    kept, signs, reports = halve_indices(pts, seed=3, schedule_builder=builder)
    assert abs(2 * len(kept) - len(pts)) <= len(reports)


def test_build_coreset_identity():
    rng = np.random.default_rng(3)
    pts = rng.uniform(-1, 1, size=(64, 2))
    res = build_coreset(pts, target=64, seed=0, schedule_builder=builder)
    assert np.array_equal(res.indices, np.arange(64))
    assert res.rounds == ()


def test_build_coreset_one_round():
    rng = np.random.default_rng(4)
    pts = rng.uniform(-1, 1, size=(128, 2))
    res = build_coreset(pts, target=64, seed=0, schedule_builder=builder)
    assert len(res.rounds) == 1
    assert res.size == 64


def test_build_coreset_trajectory():
    rng = np.random.default_rng(5)
    pts = rng.uniform(-1, 1, size=(4096, 2))
    res = build_coreset(pts, target=128, seed=0, schedule_builder=builder)
    sizes = [r.size_after for r in res.rounds]
    assert len(res.rounds) == 5
    for expected, got, rnd in zip([2048, 1024, 512, 256, 128], sizes, res.rounds):
        assert abs(got - expected) <= len(rnd.cells)


def test_build_coreset_nesting():
    rng = np.random.default_rng(6)
    pts = rng.uniform(-2, 2, size=(256, 2))
    res = build_coreset(pts, target=32, seed=1, schedule_builder=builder)
    prev = set(range(256))
    for rnd in res.rounds:
        kept = set(rnd.kept.tolist())
        assert kept <= prev
        prev = kept
    assert set(res.indices.tolist()) <= prev | set(res.indices.tolist())
    assert set(res.indices.tolist()) == prev


def test_build_coreset_epsilon_and_presample():
    rng = np.random.default_rng(7)
    pts = rng.uniform(-1, 1, size=(600, 1))
    res = build_coreset(pts, epsilon=0.1, seed=2, presample=True,
                        schedule_builder=builder)
    # presample to ceil(4 / 0.01) = 400, halve to <= ceil(4 / 0.1) = 40.
    assert res.presampled_from == 600
    assert res.presample_indices.size == 400
    assert res.size <= 40
    assert res.target_size == 40
    assert set(res.indices.tolist()) <= set(res.presample_indices.tolist())


def test_build_coreset_argument_validation():
    pts = np.zeros((10, 1))
    with pytest.raises(ValueError, match="exactly one"):
        build_coreset(pts)
    with pytest.raises(ValueError, match="exactly one"):
        build_coreset(pts, target=5, epsilon=0.5)
    with pytest.raises(ValueError, match="out of range"):
        build_coreset(pts, target=11)
    with pytest.raises(ValueError, match="epsilon"):
        build_coreset(pts, epsilon=1.5)


def test_random_baseline_full_and_reproducible():
    rng = np.random.default_rng(8)
    pts = rng.uniform(-1, 1, size=(50, 2))
    res = random_baseline(pts, 50, seed=0)
    assert np.array_equal(res.indices, np.arange(50))
    a = random_baseline(pts, 10, seed=42).indices
    b = random_baseline(pts, 10, seed=42).indices
    assert np.array_equal(a, b)
    assert len(set(a.tolist())) == 10


def test_random_baseline_uniform_frequency():
    pts = np.zeros((8, 1))
    counts = np.zeros(8)
    trials = 10_000
    for seed in range(trials):
        counts[random_baseline(pts, 1, seed=seed).indices[0]] += 1
    freq = counts / trials
    stderr = np.sqrt((1 / 8) * (7 / 8) / trials)
    assert np.abs(freq - 1 / 8).max() <= 3 * stderr


def test_oracle_duplicates_and_singleton():
    p = [[0.3, 0.3]]
    queries = [[0.0, 0.0], [1.0, 1.0]]
    sup, signs = oracle_min_discrepancy(p + p, queries)
    assert sup == 0.0 and sorted(signs.tolist()) == [-1, 1]
    sup1, signs1 = oracle_min_discrepancy(p, queries)
    assert signs1.tolist() == [1]
    assert sup1 == pytest.approx(max(naive.gauss(q, p[0]) for q in queries), rel=1e-15)


def test_oracle_size_cap():
    with pytest.raises(ValueError, match="limited"):
        oracle_min_discrepancy(np.zeros((17, 1)), [[0.0]])


def test_oracle_dual_enumerators_bit_for_bit():
    rng = np.random.default_rng(9)
    for trial in range(3):
        n = int(rng.integers(4, 11))
        pts = rng.uniform(-1, 1, size=(n, 1))
        queries = rng.uniform(-2, 2, size=(25, 1))
        sup_a, signs_a = oracle_min_discrepancy(pts, queries)
        sup_b, signs_b = naive.oracle_enumerate(pts, queries)
        assert sup_a == sup_b  # bitwise float equality
        assert signs_a.tolist() == signs_b
