import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from gridid.linalg import NotPositiveDefiniteError, SpdFactor, solve_spd, svd, sym_eig

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_identity_eigenvalues():
    np.testing.assert_allclose(sym_eig(np.eye(3)).values, [1, 1, 1])


def test_two_by_two_eigenvalues():
    # det([[2-l, -1], [-1, 2-l]]) = (l-1)(l-3)
    np.testing.assert_allclose(sym_eig([[2, -1], [-1, 2]]).values, [1, 3])


def test_ieee14_reduced_laplacian_positive(grid14):
    assert sym_eig(grid14.laplacian.reduced).values.min() > 0


def test_asymmetric_rejected():
    with pytest.raises(ValueError):
        sym_eig([[1.0, 2.0], [0.0, 1.0]])


def test_svd_small_cases():
    np.testing.assert_array_equal(svd(np.zeros((3, 2))).s, 0.0)
    np.testing.assert_allclose(svd(np.diag([3.0, 1.0])).s, [3, 1])


@settings(max_examples=50, deadline=None)
@given(arrays(float, st.tuples(st.integers(1, 7), st.integers(1, 7)), elements=finite))
def test_svd_frobenius_and_reconstruction(X):
    U, s, Vt = svd(X)
    assert np.sum(X ** 2) == pytest.approx(np.sum(s ** 2), rel=1e-9, abs=1e-9)
    np.testing.assert_allclose((U * s) @ Vt, X, atol=1e-9 * max(1.0, np.abs(X).max()))
    assert np.all(np.diff(s) <= 0)


def test_spd_solves(rng):
    rhs = rng.normal(size=(3, 2))
    np.testing.assert_allclose(solve_spd(np.eye(3), rhs), rhs)
    np.testing.assert_allclose(solve_spd(2 * np.eye(3), np.eye(3)), 0.5 * np.eye(3))
    M = rng.normal(size=(6, 6))
    X = M @ M.T + 6 * np.eye(6)
    b = rng.normal(size=6)
    y = SpdFactor(X).solve(b)
    assert np.linalg.norm(X @ y - b) <= 1e-10 * np.linalg.norm(b)


def test_indefinite_rejected():
    with pytest.raises(NotPositiveDefiniteError):
        SpdFactor([[1.0, 2.0], [2.0, 1.0]])


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        svd([[np.nan]])
