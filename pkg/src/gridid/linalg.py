"""Dense symmetric eigendecomposition, SVD and SPD solves."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg

from ._tolerances import SYM_TOL


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    pass


class SymEig(NamedTuple):
    values: np.ndarray  # ascending
    vectors: np.ndarray  # columns are orthonormal eigenvectors


class Svd(NamedTuple):
    U: np.ndarray
    s: np.ndarray  # descending, >= 0
    Vt: np.ndarray


def _finite(X, name="input"):
    X = np.asarray(X, dtype=float)
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} has non-finite entries")
    return X


def sym_eig(X) -> SymEig:
    """Eigendecomposition of the symmetric part of ``X``.

    ``X`` is expected to be symmetric to about 1e-8 relative; anything further
    off is still symmetrized but almost certainly a caller bug.
    """
    X = _finite(X)
    asym = np.abs(X - X.T).max(initial=0.0)
    if asym > SYM_TOL * max(1.0, np.abs(X).max(initial=0.0)):
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3g})")
    w, V = np.linalg.eigh(0.5 * (X + X.T))
    return SymEig(w, V)


def svd(X) -> Svd:
    X = _finite(X)
    if X.ndim == 2 and X.shape[1] > X.shape[0]:
        # LAPACK is markedly faster on tall input
        V, s, Ut = np.linalg.svd(X.T, full_matrices=False)
        return Svd(Ut.T, s, V.T)
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    return Svd(U, s, Vt)


class SpdFactor:
    """Cholesky factor of an SPD matrix, reusable across right-hand sides."""

    def __init__(self, X):
        X = _finite(X)
        try:
            self._cf = scipy.linalg.cho_factor(X, lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError(str(exc)) from exc
        self.n = X.shape[0]

    def solve(self, rhs):
        return scipy.linalg.cho_solve(self._cf, np.asarray(rhs, dtype=float), check_finite=False)


def solve_spd(X, rhs) -> np.ndarray:
    """Solve ``X Y = rhs`` for symmetric positive definite ``X``."""
    return SpdFactor(X).solve(rhs)
