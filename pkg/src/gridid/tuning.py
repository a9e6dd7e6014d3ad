"""Regularization weight selection by masked-entry reconstruction.

Cross-validation does not apply (there is no held-out response), so each
candidate weight vector is scored by hiding a random fraction of the price
entries (set to zero), fitting on what is left and measuring how well
``B_hat^-1 S_hat`` predicts the hidden entries.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .linalg import SpdFactor
from .recovery import AdmmDivergence, Kappa, StoppingRule, admm_solve

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TuningConfig:
    grid: tuple  # four candidate lists, one per weight
    mask_fraction: float = 0.10
    repeats: int = 10
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.mask_fraction < 1:
            raise ValueError("mask fraction must lie in (0, 1)")
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")
        if len(self.grid) != 4 or any(len(g) == 0 for g in self.grid):
            raise ValueError("grid needs a non-empty candidate list for each of the 4 weights")
        for k in itertools.product(*self.grid):
            Kappa.coerce(k)

    def candidates(self):
        return [Kappa.coerce(k) for k in itertools.product(*self.grid)]


def draw_masks(shape, fraction, repeats, seed):
    """Boolean masks, one per repeat, each hiding ``round(fraction * size)`` entries."""
    rng = np.random.default_rng(seed)
    size = int(np.prod(shape))
    k = max(1, int(round(fraction * size)))
    masks = []
    for _ in range(repeats):
        m = np.zeros(size, dtype=bool)
        m[rng.choice(size, k, replace=False)] = True
        masks.append(m.reshape(shape))
    return masks


def masked_error(L_o, mask, kappa, rho, stop) -> float:
    L = np.where(mask, 0.0, L_o)
    try:
        res = admm_solve(L, kappa, rho, stop)
        pred = SpdFactor(res.B_hat).solve(res.S_hat)
    except (AdmmDivergence, np.linalg.LinAlgError, FloatingPointError) as exc:
        log.warning("tune: kappa=%s failed: %s", tuple(kappa), exc)
        return np.inf
    err = float(np.sum((pred[mask] - L_o[mask]) ** 2))
    return err if np.isfinite(err) else np.inf


def tune_kappa(L_o, cfg: TuningConfig, rho=1e3, stop: StoppingRule | None = None, n_jobs=1):
    """Exhaustive search over ``cfg.grid``.

    Returns ``(best_kappa, table)`` where ``table`` is a list of
    ``(kappa, mean_squared_error, per_repeat_errors)`` sorted best first.
    The same masks are used for every candidate.
    """
    L_o = np.asarray(L_o, dtype=float)
    if L_o.ndim != 2 or L_o.shape[1] < 2:
        raise ValueError("tuning needs an N x T price matrix with T >= 2")
    stop = stop or StoppingRule()
    masks = draw_masks(L_o.shape, cfg.mask_fraction, cfg.repeats, cfg.seed)
    cands = cfg.candidates()
    jobs = [(ci, ri) for ci in range(len(cands)) for ri in range(len(masks))]
    errs = Parallel(n_jobs=n_jobs)(
        delayed(masked_error)(L_o, masks[ri], cands[ci], rho, stop) for ci, ri in jobs
    )
    per = np.array(errs).reshape(len(cands), len(masks))
    table = [(k, float(np.mean(row)), row.tolist()) for k, row in zip(cands, per)]
    table.sort(key=lambda r: r[1])
    for k, e, _ in table[:5]:
        log.info("tune: kappa=%s mean_sq_error=%.6g", ",".join(f"{v:g}" for v in k), e)
    return table[0][0], table


class KappaSearch(BaseEstimator):
    """Grid search over the four regularization weights.

    ``X`` follows the scikit-learn orientation (intervals x buses).
    """

    def __init__(self, grid=None, mask_fraction=0.10, repeats=10, rho=1e3,
                 max_iter=2000, seed=0, n_jobs=1):
        self.grid = grid
        self.mask_fraction = mask_fraction
        self.repeats = repeats
        self.rho = rho
        self.max_iter = max_iter
        self.seed = seed
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_samples=2, ensure_min_features=2)
        cfg = TuningConfig(tuple(tuple(g) for g in self.grid), self.mask_fraction,
                           self.repeats, self.seed)
        best, table = tune_kappa(X.T, cfg, self.rho, StoppingRule(max_iter=self.max_iter),
                                 n_jobs=self.n_jobs)
        self.best_kappa_ = best
        self.table_ = table
        return self

    def rank_of(self, kappa):
        """1-based rank of ``kappa`` in the score table."""
        check_is_fitted(self, "table_")
        kappa = Kappa.coerce(kappa)
        for i, (k, _, _) in enumerate(self.table_):
            if np.allclose(k, kappa, rtol=1e-12, atol=0):
                return i + 1
        raise KeyError(f"{tuple(kappa)} is not on the grid")
