import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gridid.prox import logdet_prox, soft_threshold, svt
from gridid.recovery import AdmmState, update_B2

from oracles import nuclear_prox_cvx, scalar_argmin, sym2_grid_argmin

seeds = st.integers(0, 2**32 - 1)


def test_soft_threshold_examples():
    assert soft_threshold(1.2, 0.5) == pytest.approx(0.7)
    assert soft_threshold(-1.2, 0.5) == pytest.approx(-0.7)
    for a in (0.0, 0.3, 7.0):
        assert soft_threshold(0.0, a) == 0.0
    x = np.array([-2.0, 0.1, 5.0])
    np.testing.assert_array_equal(soft_threshold(x, 0.0), x)
    with pytest.raises(ValueError):
        soft_threshold(1.0, -1.0)


@settings(max_examples=60, deadline=None)
@given(z=st.floats(-50, 50), alpha=st.floats(0, 20))
def test_soft_threshold_is_the_l1_prox(z, alpha):
    oracle = scalar_argmin(lambda x: 0.5 * (x - z) ** 2 + alpha * abs(x), -60, 60)
    assert soft_threshold(z, alpha) == pytest.approx(oracle, abs=1e-4)


def b2_state(Z, k1, rho):
    n = Z.shape[0]
    st_ = AdmmState.initial(np.zeros((n, 1)), (k1, 1.0, 1.0, 1.0), rho)
    st_.B1 = Z.copy()
    st_.Y12 = np.zeros_like(Z)
    return st_


def test_b2_examples():
    Z = np.array([[1.0, 0.3], [-5.0, 2.0]])
    out = update_B2(b2_state(Z, k1=1.0, rho=1.0))
    assert out[0, 1] == 0.0
    assert out[1, 0] == pytest.approx(-4.0)
    np.testing.assert_array_equal(np.diag(out), [1.0, 2.0])


@settings(max_examples=60, deadline=None)
@given(seed=seeds)
def test_b2_matches_constrained_scalar_prox(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    rho, k1 = rng.uniform(0.1, 10), rng.uniform(0, 5)
    Y = rng.normal(size=(n, n))
    st_ = b2_state(rng.normal(size=(n, n)) * 3, k1, rho)
    st_.Y12 = Y
    out = update_B2(st_)
    Z = st_.B1 + Y / rho
    for i in range(n):
        for j in range(n):
            if i == j:
                assert out[i, j] == pytest.approx(Z[i, j])
                continue
            ref = scalar_argmin(lambda b: rho / 2 * (b - Z[i, j]) ** 2 + k1 * abs(b), -50, 0)
            assert out[i, j] == pytest.approx(ref, abs=1e-4)


def test_svt_examples():
    np.testing.assert_array_equal(svt(np.diag([0.5, 0.2]), 0.6), 0.0)
    np.testing.assert_allclose(svt(np.diag([3.0, 1.0]), 2.0), np.diag([1.0, 0.0]))


@pytest.mark.parametrize("seed", range(8))
def test_svt_matches_convex_solver(seed):
    X = np.random.default_rng(seed).normal(size=(3, 4))
    np.testing.assert_allclose(svt(X, 0.3), nuclear_prox_cvx(X, 0.3), atol=1e-4)


def test_logdet_examples():
    assert logdet_prox(np.zeros((1, 1)), 1.0)[0, 0] == pytest.approx(1.0)
    # x - 3 - 4/x = 0 at x = 4
    assert logdet_prox(np.array([[3.0]]), 4.0)[0, 0] == pytest.approx(4.0)
    np.testing.assert_allclose(logdet_prox(np.eye(3), 2.0), 2.0 * np.eye(3))


def _logdet_obj(A, alpha):
    def f(a, b, c):
        det = a * c - b * b
        ok = (a > 0) & (det > 0)
        val = 0.5 * ((a - A[0, 0]) ** 2 + (b - A[0, 1]) ** 2 + (b - A[1, 0]) ** 2
                     + (c - A[1, 1]) ** 2) - alpha * np.log(np.where(ok, det, 1.0))
        return np.where(ok, val, np.inf)
    return f


@settings(max_examples=50, deadline=None)
@given(seed=seeds)
def test_logdet_matches_grid_search(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(2, 2)) * 2
    alpha = rng.uniform(0.05, 3)
    X = logdet_prox(A, alpha)
    r = np.linalg.norm(A, 2) + np.sqrt(alpha) + 1
    (a, b, c), _ = sym2_grid_argmin(_logdet_obj(A, alpha), [r, 0, r], [r, r, r])
    np.testing.assert_allclose(X, [[a, b], [b, c]], atol=1e-5)


@settings(max_examples=50, deadline=None)
@given(seed=seeds)
def test_logdet_ignores_antisymmetric_part(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    A = rng.normal(size=(n, n))
    A = A + A.T
    W = rng.normal(size=(n, n)) * 10
    alpha = rng.uniform(1e-3, 5)
    assert np.abs(logdet_prox(A, alpha) - logdet_prox(A + W - W.T, alpha)).max() <= 1e-10


@settings(max_examples=50, deadline=None)
@given(seed=seeds)
def test_logdet_eigenvalue_floor(seed):
    # the sqrt(alpha) floor holds for PSD input only; negative eigenvalues map
    # to 2 alpha / (sqrt(s^2 + 4 alpha) - s), which is positive but smaller
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(4, 4)) * 100
    alpha = rng.uniform(1e-6, 1)
    assert np.linalg.eigvalsh(logdet_prox(M + M.T, alpha)).min() > 0
    w = np.linalg.eigvalsh(logdet_prox(M @ M.T, alpha))
    assert w.min() >= np.sqrt(alpha) * (1 - 1e-9)
