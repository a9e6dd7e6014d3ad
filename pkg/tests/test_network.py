import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gridid.network import (GridError, GridTopology, build_incidence, dc_flows, load_grid,
                            save_grid, weighted_laplacian)

from conftest import random_connected


def test_two_bus_incidence():
    g = GridTopology(2, [(0, 1, 0.5, 10.0)])
    inc = build_incidence(g)
    np.testing.assert_array_equal(inc.full, [[1.0, -1.0]])
    np.testing.assert_array_equal(inc.reduced, [[-1.0]])


def test_triangle_reduced_incidence(triangle):
    inc = triangle.incidence
    np.testing.assert_array_equal(inc.reduced, [[-1, 0], [1, -1], [0, -1]])
    assert np.linalg.matrix_rank(inc.reduced) == 2


def test_ieee14_incidence(grid14):
    A = grid14.incidence.full
    assert A.shape == (20, 14)
    np.testing.assert_array_equal(A @ np.ones(14), 0.0)
    assert np.linalg.matrix_rank(A) == 13


def test_two_bus_laplacian():
    g = GridTopology(2, [(0, 1, 0.5, 10.0)])
    lap = g.laplacian
    np.testing.assert_allclose(lap.full, [[2, -2], [-2, 2]])
    np.testing.assert_allclose(lap.reduced, [[2.0]])


def test_triangle_laplacian_matches_hand_product(triangle):
    A = np.array([[-1.0, 0], [1, -1], [0, -1]])
    np.testing.assert_allclose(triangle.laplacian.reduced, A.T @ A)
    np.testing.assert_allclose(triangle.laplacian.reduced, [[2, -1], [-1, 2]])


def test_ieee14_laplacian_spd(grid14):
    B = grid14.laplacian.reduced
    assert B.shape == (13, 13)
    np.testing.assert_array_equal(B, B.T)
    assert np.linalg.eigvalsh(B).min() > 0


def test_nonpositive_reactance_rejected(triangle):
    with pytest.raises(GridError):
        weighted_laplacian(triangle.incidence, [1.0, 0.0, 1.0])
    with pytest.raises(GridError):
        GridTopology(2, [(0, 1, -1.0, 10.0)])


def test_disconnected_names_component():
    with pytest.raises(GridError, match=r"\{2, 3\}|2, 3"):
        GridTopology(4, [(0, 1, 1.0, 1.0), (2, 3, 1.0, 1.0)])


def test_parallel_lines_merge():
    g = GridTopology(2, [(0, 1, 1.0, 10.0), (1, 0, 1.0, 5.0)])
    assert g.n_lines == 1
    assert g.lines[0].x == pytest.approx(0.5)
    assert g.lines[0].fmax == pytest.approx(15.0)
    assert g.merged_from == ((0, 1),)


def test_flows_examples():
    g = GridTopology(2, [(0, 1, 0.5, 10.0)])
    assert dc_flows(g.incidence, g.reactances, [0.1, 0.0])[0] == pytest.approx(0.2)
    np.testing.assert_array_equal(dc_flows(g.incidence, g.reactances, [0.0, 0.0]), 0.0)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), beta=st.floats(-1e3, 1e3))
def test_flows_ignore_common_phase_shift(seed, beta):
    rng = np.random.default_rng(seed)
    g = random_connected(rng, int(rng.integers(2, 9)), 4)
    theta = rng.normal(size=g.bus_count)
    f0 = dc_flows(g.incidence, g.reactances, theta)
    f1 = dc_flows(g.incidence, g.reactances, theta + beta)
    np.testing.assert_allclose(f0, f1, atol=1e-9 * (1 + abs(beta)))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_random_grid_invariants(seed):
    rng = np.random.default_rng(seed)
    g = random_connected(rng, int(rng.integers(2, 11)), int(rng.integers(0, 8)))
    inc, lap = g.incidence, g.laplacian
    np.testing.assert_array_equal(inc.full @ np.ones(g.bus_count), 0.0)
    assert np.abs(lap.full @ np.ones(g.bus_count)).max() <= 1e-10
    np.linalg.cholesky(lap.reduced)
    for ln in g.lines:
        assert lap.full[ln.from_bus, ln.to_bus] == -1.0 / ln.x


def test_grid_round_trip(tmp_path, grid14):
    save_grid(grid14, tmp_path / "g.json")
    back = load_grid(tmp_path / "g.json")
    assert back.lines == grid14.lines
    assert back.reference_bus == grid14.reference_bus
