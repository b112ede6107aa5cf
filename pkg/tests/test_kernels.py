"""The numba path and the pure-numpy fallback must agree cell-for-cell."""

import numpy as np
import pytest

from cageflow import _kernels as K

pytestmark = pytest.mark.skipif(not K.NUMBA_ENABLED, reason="numba path disabled")


def _grids(rng, p, q):
    nav = rng.random((p, q)) > 0.3
    nav[0, 0] = True
    goals = np.zeros((p, q), dtype=bool)
    cells = np.argwhere(nav)
    for idx in rng.choice(len(cells), size=min(3, len(cells)), replace=False):
        goals[tuple(cells[idx])] = True
    return nav, goals


def test_bfs_distance_paths_agree():
    rng = np.random.default_rng(0)
    for _ in range(25):
        nav, goals = _grids(rng, int(rng.integers(1, 40)), int(rng.integers(1, 40)))
        assert np.array_equal(K.bfs_distance_numba(nav, goals), K.bfs_distance_numpy(nav, goals))


def test_run_lengths_paths_agree():
    rng = np.random.default_rng(1)
    for _ in range(25):
        nav, _ = _grids(rng, int(rng.integers(1, 40)), int(rng.integers(1, 40)))
        a = K.run_lengths_numba(nav)
        b = K.run_lengths_numpy(nav)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_segment_sweep_paths_agree():
    rng = np.random.default_rng(2)
    for _ in range(25):
        nav, _ = _grids(rng, int(rng.integers(1, 30)), int(rng.integers(1, 30)))
        vx, vy = K.run_lengths_numpy(nav)
        rid_a, reg_a = K.segment_sweep_numba(nav, vx, vy)
        rid_b, reg_b = K.segment_sweep_numpy(nav, vx, vy)
        assert np.array_equal(rid_a, rid_b)
        assert np.array_equal(reg_a, reg_b)


def test_pair_repulsion_paths_agree():
    rng = np.random.default_rng(3)
    for n in (0, 1, 2, 7, 40):
        pos = rng.random((n, 2)) * 10
        a = K.pair_repulsion_numba(pos, 0.5, 5.0, 2.0, 0.5)
        b = K.pair_repulsion_numpy(pos, 0.5, 5.0, 2.0, 0.5)
        assert np.allclose(a, b, atol=1e-12)


def test_occupancy_counts_paths_agree():
    rng = np.random.default_rng(4)
    ci = rng.integers(0, 9, size=500)
    cj = rng.integers(0, 7, size=500)
    assert np.array_equal(
        K.occupancy_counts_numba(ci, cj, 9, 7), K.occupancy_counts_numpy(ci, cj, 9, 7)
    )


def test_weighted_goal_field_paths_agree():
    rng = np.random.default_rng(5)
    for _ in range(15):
        nav, goals = _grids(rng, int(rng.integers(2, 25)), int(rng.integers(2, 25)))
        if not (goals & nav).any():
            continue
        cost = 1.0 + rng.random(nav.shape)
        a = K.weighted_goal_field_numba(nav, goals, cost)
        b = K.weighted_goal_field_numpy(nav, goals, cost)
        assert np.allclose(a, b, atol=1e-9, equal_nan=True)
