"""Laplacian recovery from congestion prices.

Fits ``B L ~ S`` with a sparse, non-positive off-diagonal, positive definite
``B`` and a sparse, low-rank ``S`` by solving::

    min  0.5 ||B L - S||_F^2 + k1 ||O * B||_1 + k2 ||S||_1 + k3 ||S||_* - k4 log det B
    s.t. B > 0,  offdiag(B) <= 0

with a consensus ADMM over the split ``B1 = B2 = B3``, ``S1 = S2``. Every
block update has a closed form.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import _textio
from ._tolerances import ADMM_EPS_ABS, ADMM_EPS_REL, ADMM_MAX_ITER
from .linalg import SpdFactor, svd
from .prox import logdet_prox, soft_threshold, svt

log = logging.getLogger(__name__)

DEFAULT_KAPPA = (1e-3, 5e-4, 1e-2, 1e-1)


class AdmmDivergence(FloatingPointError):
    def __init__(self, msg, dump):
        super().__init__(msg)
        self.dump = dump


class Kappa(NamedTuple):
    """Weights of the off-diagonal l1, S l1, S nuclear and -log det terms."""

    k1: float
    k2: float
    k3: float
    k4: float

    @classmethod
    def coerce(cls, value):
        if isinstance(value, str):
            value = [float(v) for v in value.split(",")]
        value = [float(v) for v in value]
        if len(value) != 4:
            raise ValueError(f"kappa needs 4 weights, got {len(value)}")
        k = cls(*value)
        # the log-det weight keeps B positive definite; the others may vanish
        if min(k[:3]) < 0 or not k.k4 > 0:
            raise ValueError(f"kappa needs k1..k3 >= 0 and k4 > 0, got {tuple(k)}")
        return k


@dataclass(frozen=True)
class StoppingRule:
    eps_abs: float = ADMM_EPS_ABS
    eps_rel: float = ADMM_EPS_REL
    max_iter: int = ADMM_MAX_ITER


def _offdiag(X):
    return X - np.diag(np.diag(X))


def objective(B, S, L, kappa) -> float:
    """Regularized negative log-likelihood; ``inf`` outside the domain."""
    k1, k2, k3, k4 = kappa
    Bs = 0.5 * (B + B.T)
    w = np.linalg.eigvalsh(Bs)
    if w[0] <= 0 or np.any(_offdiag(B) > 1e-9 * max(1.0, np.abs(B).max())):
        return np.inf
    fit = 0.5 * np.sum((B @ L - S) ** 2)
    return float(fit + k1 * np.abs(_offdiag(B)).sum() + k2 * np.abs(S).sum()
                 + k3 * svd(S).s.sum() - k4 * np.sum(np.log(w)))


@dataclass
class AdmmState:
    """Primal blocks, scaled-free duals and the cached ``(LL' + 2 rho I)`` factor."""

    L: np.ndarray
    rho: float
    kappa: Kappa
    B1: np.ndarray
    B2: np.ndarray
    B3: np.ndarray
    S1: np.ndarray
    S2: np.ndarray
    Y12: np.ndarray
    Y13: np.ndarray
    Y: np.ndarray
    iteration: int = 0
    history: list = field(default_factory=list)
    _gram: SpdFactor | None = field(default=None, repr=False)
    _gram_rho: float | None = field(default=None, repr=False)

    @classmethod
    def initial(cls, L, kappa, rho):
        N, T = L.shape
        eye = np.eye(N)
        zN, zS = np.zeros((N, N)), np.zeros((N, T))
        return cls(L=L, rho=float(rho), kappa=Kappa.coerce(kappa),
                   B1=eye.copy(), B2=eye.copy(), B3=eye.copy(),
                   S1=zS.copy(), S2=zS.copy(), Y12=zN.copy(), Y13=zN.copy(), Y=zS.copy())

    @property
    def gram(self) -> SpdFactor:
        if self._gram is None or self._gram_rho != self.rho:
            N = self.L.shape[0]
            self._gram = SpdFactor(self.L @ self.L.T + 2.0 * self.rho * np.eye(N))
            self._gram_rho = self.rho
        return self._gram


# -- block updates -----------------------------------------------------------
# Each returns the new block without mutating the state.

def update_B1(state: AdmmState, L=None) -> np.ndarray:
    L = state.L if L is None else L
    r = state.rho
    rhs = state.S2 @ L.T + r * state.B2 + r * state.B3 - state.Y12 - state.Y13
    # rhs K^-1 with K symmetric
    return state.gram.solve(rhs.T).T


def update_S1(state: AdmmState) -> np.ndarray:
    return soft_threshold(state.S2 - state.Y / state.rho, state.kappa.k2 / state.rho)


def update_B2(state: AdmmState) -> np.ndarray:
    Z = state.B1 + state.Y12 / state.rho
    out = np.minimum(Z + state.kappa.k1 / state.rho, 0.0)
    np.fill_diagonal(out, np.diag(Z))
    return out


def update_B3(state: AdmmState) -> np.ndarray:
    return logdet_prox(state.B1 + state.Y13 / state.rho, state.kappa.k4 / state.rho)


def update_S2(state: AdmmState, L=None) -> np.ndarray:
    L = state.L if L is None else L
    r = state.rho
    return svt(state.B1 @ L + r * state.S1 + state.Y, state.kappa.k3) / (r + 1.0)


def update_duals(state: AdmmState):
    r = state.rho
    return (state.Y12 + r * (state.B1 - state.B2),
            state.Y13 + r * (state.B1 - state.B3),
            state.Y + r * (state.S1 - state.S2))


@dataclass
class RecoveryResult:
    B_hat: np.ndarray
    S_hat: np.ndarray
    converged: bool
    iterations: int
    primal_residual: float
    dual_residual: float
    objective: float
    history: np.ndarray  # columns: iteration, r, s, eps_pri, eps_dual, objective
    kappa: Kappa
    rho: float
    seconds: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    HISTORY_COLUMNS = ("iteration", "primal", "dual", "eps_pri", "eps_dual", "objective")

    def reconstruct(self):
        """Model prices ``B_hat^-1 S_hat``."""
        return SpdFactor(self.B_hat).solve(self.S_hat)


def admm_step(state: AdmmState) -> tuple[float, float]:
    """One Gauss-Seidel sweep. Mutates ``state``; returns (primal, dual) residuals."""
    state.B1 = update_B1(state)
    state.S1 = update_S1(state)
    B2, B3, S2 = update_B2(state), update_B3(state), update_S2(state)
    dB2, dB3, dS2 = B2 - state.B2, B3 - state.B3, S2 - state.S2
    state.B2, state.B3, state.S2 = B2, B3, S2
    state.Y12, state.Y13, state.Y = update_duals(state)
    state.iteration += 1
    r = np.sqrt(np.sum((state.B1 - B2) ** 2) + np.sum((state.B1 - B3) ** 2)
                + np.sum((state.S1 - S2) ** 2))
    s = state.rho * np.sqrt(np.sum(dB2 ** 2) + np.sum(dB3 ** 2) + np.sum(dS2 ** 2))
    return float(r), float(s)


def _tolerances(state, stop):
    N, T = state.L.shape
    p = 2 * N * N + N * T
    n = N * N + N * T
    x_norm = np.sqrt(2 * np.sum(state.B1 ** 2) + np.sum(state.S1 ** 2))
    z_norm = np.sqrt(np.sum(state.B2 ** 2) + np.sum(state.B3 ** 2) + np.sum(state.S2 ** 2))
    y_norm = np.sqrt(np.sum(state.Y12 ** 2) + np.sum(state.Y13 ** 2) + np.sum(state.Y ** 2))
    eps_pri = np.sqrt(p) * stop.eps_abs + stop.eps_rel * max(x_norm, z_norm)
    eps_dual = np.sqrt(n) * stop.eps_abs + stop.eps_rel * y_norm
    return float(eps_pri), float(eps_dual)


def admm_solve(L, kappa=DEFAULT_KAPPA, rho=1e3, stop: StoppingRule | None = None,
               objective_every=100, state: AdmmState | None = None) -> RecoveryResult:
    """Run the consensus ADMM on the N x T price matrix ``L``.

    Returns the ``B3`` block (positive definite by construction) as the
    Laplacian estimate and ``S1`` (exactly sparse) as the injection estimate.
    Hitting ``max_iter`` is reported through ``converged=False``.
    """
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] < 2 or L.shape[1] < 1:
        raise ValueError(f"price matrix must be N x T with N >= 2, T >= 1; got {L.shape}")
    if not np.all(np.isfinite(L)):
        raise ValueError("price matrix has non-finite entries")
    if not rho > 0:
        raise ValueError("rho must be positive")
    kappa = Kappa.coerce(kappa)
    stop = stop or StoppingRule()
    if state is None:
        state = AdmmState.initial(L, kappa, rho)
    t0 = time.perf_counter()
    hist = []
    converged = False
    r = s = np.inf
    while state.iteration < stop.max_iter:
        r, s = admm_step(state)
        if not (np.isfinite(r) and np.isfinite(s)):
            raise AdmmDivergence(
                f"non-finite iterate at iteration {state.iteration}",
                {"iteration": state.iteration, "B1": state.B1, "S2": state.S2},
            )
        eps_pri, eps_dual = _tolerances(state, stop)
        done = r <= eps_pri and s <= eps_dual
        obj = np.nan
        if done or state.iteration % objective_every == 0:
            obj = objective(state.B3, state.S1, L, kappa)
        hist.append((state.iteration, r, s, eps_pri, eps_dual, obj))
        if state.iteration % 1000 == 0:
            log.debug("admm: iteration=%d primal=%.3e dual=%.3e eps_pri=%.3e eps_dual=%.3e",
                      state.iteration, r, s, eps_pri, eps_dual)
        if done:
            converged = True
            break

    B3 = 0.5 * (state.B3 + state.B3.T)
    off = _offdiag(B3)
    clipped = float(off.max(initial=0.0))
    B_hat = np.where(off > 0, 0.0, off) + np.diag(np.diag(B3))
    S_hat = state.S1.copy()
    elapsed = time.perf_counter() - t0
    log.info("admm: converged=%s iterations=%d primal=%.3e dual=%.3e seconds=%.2f",
             converged, state.iteration, r, s, elapsed)
    return RecoveryResult(
        B_hat=B_hat, S_hat=S_hat, converged=converged, iterations=state.iteration,
        primal_residual=r, dual_residual=s, objective=objective(B_hat, S_hat, L, kappa),
        history=np.array(hist).reshape(-1, 6), kappa=kappa, rho=float(rho), seconds=elapsed,
        diagnostics={
            "B1_asymmetry": float(np.abs(state.B1 - state.B1.T).max()),
            "B3_offdiag_clipped": clipped,
            "gap_B12": float(np.linalg.norm(state.B1 - state.B2)),
            "gap_B13": float(np.linalg.norm(state.B1 - state.B3)),
            "gap_S12": float(np.linalg.norm(state.S1 - state.S2)),
        },
    )


class LaplacianRecovery(TransformerMixin, BaseEstimator):
    """Estimate the reduced grid Laplacian from a price matrix.

    Follows the scikit-learn convention: ``X`` has one row per market
    interval and one column per (non-reference) bus, i.e. ``X = L.T``.

    Parameters
    ----------
    kappa : sequence of 4 floats
        Weights (off-diagonal l1 on B, l1 on S, nuclear norm on S, -log det B).
    rho : float
        ADMM penalty, held fixed.
    eps_abs, eps_rel : float
        Absolute and relative parts of the primal/dual stopping tolerances.
    max_iter : int
        Iteration cap; reaching it leaves ``converged_`` False.

    Attributes
    ----------
    laplacian_ : ndarray (n_buses, n_buses)
    injections_ : ndarray (n_intervals, n_buses)
        Sparse injection estimate, one row per training interval.
    result_ : RecoveryResult
    """

    def __init__(self, kappa=DEFAULT_KAPPA, rho=1e3, eps_abs=ADMM_EPS_ABS,
                 eps_rel=ADMM_EPS_REL, max_iter=ADMM_MAX_ITER):
        self.kappa = kappa
        self.rho = rho
        self.eps_abs = eps_abs
        self.eps_rel = eps_rel
        self.max_iter = max_iter

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_features=2)
        stop = StoppingRule(self.eps_abs, self.eps_rel, self.max_iter)
        res = admm_solve(X.T, self.kappa, self.rho, stop)
        self.result_ = res
        self.laplacian_ = res.B_hat
        self.injections_ = res.S_hat.T
        self.converged_ = res.converged
        self.n_iter_ = res.iterations
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        """Map prices to injection signals ``B_hat lambda_t`` (one row per interval)."""
        check_is_fitted(self, "laplacian_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} buses, fitted on {self.n_features_in_}")
        return X @ self.laplacian_.T

    def inverse_transform(self, S):
        """Prices implied by injection signals: rows of ``(B_hat^-1 S')'``."""
        check_is_fitted(self, "laplacian_")
        S = check_array(S)
        return SpdFactor(self.laplacian_).solve(S.T).T

    def reconstruct(self):
        """Fitted prices ``B_hat^-1 S_hat`` in the training orientation."""
        check_is_fitted(self, "laplacian_")
        return self.result_.reconstruct().T

    def score(self, X, y=None):
        """Negative recovery objective of the fitted pair on ``X`` (higher is better)."""
        check_is_fitted(self, "laplacian_")
        X = check_array(X)
        if X.shape[0] != self.injections_.shape[0]:
            raise ValueError("score needs the training intervals (S is per interval)")
        return -objective(self.laplacian_, self.injections_.T, X.T, self.result_.kappa)


def save_result(res: RecoveryResult, path, manifest=None):
    header = {
        "N": int(res.B_hat.shape[0]), "T": int(res.S_hat.shape[1]),
        "kappa": list(res.kappa), "rho": res.rho, "converged": res.converged,
        "iterations": res.iterations, "primal_residual": res.primal_residual,
        "dual_residual": res.dual_residual, "objective": res.objective,
        "history_columns": list(RecoveryResult.HISTORY_COLUMNS),
        "diagnostics": res.diagnostics,
    }
    if manifest is not None:
        header["manifest"] = manifest
    _textio.write_blocks(path, "result", header, {
        "B_hat": res.B_hat, "S_hat": res.S_hat, "history": res.history,
    })


def load_result(path) -> RecoveryResult:
    header, blocks = _textio.read_blocks(path, "result")
    try:
        N, T = int(header["N"]), int(header["T"])
    except (KeyError, TypeError, ValueError) as exc:
        raise _textio.SchemaError(f"{path}: header lacks N/T") from exc
    hist = blocks.get("history", np.zeros((0, 6)))
    return RecoveryResult(
        B_hat=_textio.require_shape(blocks, "B_hat", (N, N), path),
        S_hat=_textio.require_shape(blocks, "S_hat", (N, T), path),
        converged=bool(header.get("converged")), iterations=int(header.get("iterations", 0)),
        primal_residual=float(header.get("primal_residual", np.nan)),
        dual_residual=float(header.get("dual_residual", np.nan)),
        objective=float(header.get("objective", np.nan)), history=hist,
        kappa=Kappa.coerce(header["kappa"]), rho=float(header["rho"]),
        diagnostics=header.get("diagnostics", {}),
    )
