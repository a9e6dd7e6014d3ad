"""Closed-form proximal operators used by the recovery solver."""
from __future__ import annotations

import numpy as np

from .linalg import svd, sym_eig


def soft_threshold(x, alpha):
    """Entrywise ``sign(x) * max(|x| - alpha, 0)``; works on scalars and arrays."""
    if alpha < 0:
        raise ValueError("threshold must be non-negative")
    x = np.asarray(x, dtype=float)
    out = np.sign(x) * np.maximum(np.abs(x) - alpha, 0.0)
    return out if out.ndim else float(out)


def svt(X, alpha):
    """Singular value thresholding: prox of ``alpha * ||.||_*`` at ``X``."""
    if alpha < 0:
        raise ValueError("threshold must be non-negative")
    U, s, Vt = svd(X)
    s = np.maximum(s - alpha, 0.0)
    k = int(np.count_nonzero(s))
    return (U[:, :k] * s[:k]) @ Vt[:k]


def logdet_prox(A, alpha):
    """Minimizer of ``0.5 ||X - A||_F^2 - alpha log det X`` over X > 0.

    Only the symmetric part of ``A`` matters: the antisymmetric part is
    orthogonal to every symmetric candidate. Eigenvalues map as
    ``s -> (s + sqrt(s^2 + 4 alpha)) / 2`` which is at least ``sqrt(alpha)``.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    A = np.asarray(A, dtype=float)
    w, U = sym_eig(0.5 * (A + A.T))
    # s + sqrt(s^2+4a) cancels badly for s << 0; use 2a / (sqrt(s^2+4a) - s) there
    root = np.sqrt(w * w + 4.0 * alpha)
    lam = np.where(w >= 0, 0.5 * (w + root), 2.0 * alpha / (root - w))
    X = (U * lam) @ U.T
    return 0.5 * (X + X.T)
