"""Support and error metrics comparing a recovered Laplacian to the truth."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


@dataclass
class EvalReport:
    precision: float
    recall: float
    f1: float
    frobenius_error: float
    sign_violations: int
    true_edges: int
    found_edges: int
    tau: float
    s_rank: int = 0
    s_density: float = 0.0

    def to_dict(self):
        return asdict(self)


def unit_max(X):
    X = np.asarray(X, dtype=float)
    m = np.abs(X).max(initial=0.0)
    return X / m if m > 0 else X.copy()


def edge_set(B, tau):
    """Upper-triangle pairs whose unit-max normalized magnitude exceeds ``tau``."""
    Bn = unit_max(B)
    iu = np.triu_indices(Bn.shape[0], k=1)
    return {(int(i), int(j)) for i, j in zip(*iu) if abs(Bn[i, j]) > tau}


def evaluate(B_hat, S_hat, B_true, tau=0.05) -> EvalReport:
    """Compare off-diagonal support after scaling both matrices to unit max.

    ``frobenius_error`` is ``||Bh - B|| / (||Bh|| + ||B||)`` on the scaled
    matrices, which lies in [0, 1]. ``sign_violations`` counts off-diagonal
    pairs of the estimate that are positive beyond ``tau``.
    """
    B_hat = np.asarray(B_hat, dtype=float)
    B_true = np.asarray(B_true, dtype=float)
    if B_hat.shape != B_true.shape or B_hat.ndim != 2 or B_hat.shape[0] != B_hat.shape[1]:
        raise ValueError(f"shape mismatch: {B_hat.shape} vs {B_true.shape}")
    if not 0 < tau < 1:
        raise ValueError("tau must lie in (0, 1)")
    found, true = edge_set(B_hat, tau), edge_set(B_true, tau)
    tp = len(found & true)
    precision = tp / len(found) if found else 0.0
    recall = tp / len(true) if true else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    Bh, Bt = unit_max(B_hat), unit_max(B_true)
    denom = np.linalg.norm(Bh) + np.linalg.norm(Bt)
    err = float(np.linalg.norm(Bh - Bt) / denom) if denom > 0 else 0.0
    iu = np.triu_indices(B_hat.shape[0], k=1)
    violations = int(np.sum(Bh[iu] > tau))
    s_rank, s_density = 0, 0.0
    if S_hat is not None:
        S = np.asarray(S_hat, dtype=float)
        if S.size:
            s = np.linalg.svd(S, compute_uv=False)
            s_rank = int(np.sum(s > 1e-8 * max(s[0], 1e-300)))
            s_density = float(np.count_nonzero(S) / S.size)
    return EvalReport(precision, recall, f1, err, violations, len(true), len(found),
                      float(tau), s_rank, s_density)
