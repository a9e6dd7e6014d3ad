"""Dense revised simplex with Bland's rule, returning vertex duals.

Problems are stated as::

    minimize    c'x
    subject to  G x <= h
                E x  = f

with ``x`` free. The Lagrangian convention is ``c + G'mu + E'nu = 0`` with
``mu >= 0``, so ``mu_j`` is the rate at which the optimal value *drops* as
``h_j`` grows.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from ._tolerances import LP_FEAS_TOL, LP_KKT_TOL, LP_MAX_ITER, LP_PIVOT_TOL

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class LpIterationError(RuntimeError):
    """Iteration cap hit; carries the last basis for post-mortem."""

    def __init__(self, msg, dump):
        super().__init__(msg)
        self.dump = dump


@dataclass
class LinearProgram:
    c: np.ndarray
    G: np.ndarray | None = None
    h: np.ndarray | None = None
    E: np.ndarray | None = None
    f: np.ndarray | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        if self.G is None:
            self.G, self.h = np.zeros((0, n)), np.zeros(0)
        if self.E is None:
            self.E, self.f = np.zeros((0, n)), np.zeros(0)
        self.G = np.atleast_2d(np.asarray(self.G, dtype=float)).reshape(-1, n)
        self.E = np.atleast_2d(np.asarray(self.E, dtype=float)).reshape(-1, n)
        self.h = np.asarray(self.h, dtype=float).ravel()
        self.f = np.asarray(self.f, dtype=float).ravel()
        if self.h.size != self.G.shape[0] or self.f.size != self.E.shape[0]:
            raise ValueError("right-hand sides do not match constraint rows")
        for name in ("c", "G", "h", "E", "f"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"non-finite entries in {name}")
        if self.E.shape[0] >= n and n > 0:
            log.warning("lp: %d equality rows for %d variables; duals may be non-unique",
                        self.E.shape[0], n)

    @property
    def n(self):
        return self.c.size


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None = None
    mu: np.ndarray | None = None  # inequality multipliers, >= 0
    nu: np.ndarray | None = None  # equality multipliers
    objective: float = np.nan
    degenerate: bool = False
    iterations: int = 0
    basis: list = field(default_factory=list)

    @property
    def optimal(self):
        return self.status == OPTIMAL


def kkt_residuals(lp: LinearProgram, sol: LpSolution) -> dict:
    """Max-abs stationarity, primal, dual and complementarity residuals."""
    x, mu, nu = sol.x, sol.mu, sol.nu
    slack = lp.G @ x - lp.h
    return {
        "stationarity": float(np.max(np.abs(lp.c + lp.G.T @ mu + lp.E.T @ nu), initial=0.0)),
        "primal": float(max(np.max(slack, initial=0.0),
                            np.max(np.abs(lp.E @ x - lp.f), initial=0.0))),
        "dual": float(max(-np.min(mu, initial=0.0), 0.0)),
        "complementarity": float(np.max(np.abs(mu * slack), initial=0.0)),
    }


class _Simplex:
    """Revised simplex on ``min c'z, A z = b, z >= 0`` with b >= 0."""

    def __init__(self, A, b, max_iter):
        self.A, self.b = A, b
        self.m, self.ncols = A.shape
        self.max_iter = max_iter
        self.iterations = 0

    def factor(self, basis):
        return lu_factor(self.A[:, basis])

    def run(self, c, basis, allowed):
        """Pivot to optimality. Returns (status, basis)."""
        A, b = self.A, self.b
        while True:
            if self.iterations >= self.max_iter:
                lu = self.factor(basis)
                raise LpIterationError(
                    f"simplex did not terminate in {self.max_iter} pivots",
                    {"basis": list(basis), "x_basic": lu_solve(lu, b).tolist()},
                )
            lu = self.factor(basis)
            xb = lu_solve(lu, b)
            y = lu_solve(lu, c[basis], trans=1)
            d = c - A.T @ y
            d[basis] = 0.0
            candidates = np.flatnonzero((d < -LP_PIVOT_TOL) & allowed)
            if candidates.size == 0:
                return OPTIMAL, basis
            j = int(candidates[0])  # Bland: lowest index enters
            u = lu_solve(lu, A[:, j])
            rows = np.flatnonzero(u > LP_PIVOT_TOL)
            if rows.size == 0:
                return UNBOUNDED, basis
            ratios = np.maximum(xb[rows], 0.0) / u[rows]
            best = ratios.min()
            ties = rows[ratios <= best + LP_PIVOT_TOL * max(1.0, abs(best))]
            leave = min(ties, key=lambda r: basis[r])  # Bland: lowest index leaves
            basis = basis.copy()
            basis[leave] = j
            self.iterations += 1


def solve(lp: LinearProgram, tol: float = LP_KKT_TOL, max_iter: int = LP_MAX_ITER,
          dump_path=None) -> LpSolution:
    """Solve ``lp`` by two-phase revised simplex.

    Infeasible and unbounded problems are reported through ``status``. The
    returned duals are the ones defined by the optimal basis; when a basic
    variable sits at zero the vertex is degenerate, the duals are one valid
    selection among several, and ``degenerate`` is set.
    """
    n, mi, me = lp.n, lp.G.shape[0], lp.E.shape[0]
    m = mi + me
    # z = [x+, x-, slack]
    A = np.zeros((m, 2 * n + mi))
    A[:mi, :n], A[:mi, n:2 * n], A[:mi, 2 * n:] = lp.G, -lp.G, np.eye(mi)
    A[mi:, :n], A[mi:, n:2 * n] = lp.E, -lp.E
    b = np.concatenate([lp.h, lp.f])
    sign = np.where(b < 0, -1.0, 1.0)
    A *= sign[:, None]
    b = b * sign
    c_std = np.concatenate([lp.c, -lp.c, np.zeros(mi)])

    # slack columns seed the basis where they have +1; the rest get artificials
    basis = [-1] * m
    for i in range(mi):
        if sign[i] > 0:
            basis[i] = 2 * n + i
    need = [i for i in range(m) if basis[i] < 0]
    n_struct = A.shape[1]
    if need:
        art = np.zeros((m, len(need)))
        for k, i in enumerate(need):
            art[i, k] = 1.0
            basis[i] = n_struct + k
        A = np.hstack([A, art])
    ncols = A.shape[1]
    structural = np.zeros(ncols, dtype=bool)
    structural[:n_struct] = True

    splx = _Simplex(A, b, max_iter)
    if need:
        c1 = np.zeros(ncols)
        c1[n_struct:] = 1.0
        _, basis = splx.run(c1, np.array(basis), np.ones(ncols, dtype=bool))
        xb = lu_solve(splx.factor(basis), b)
        infeas = float(sum(xb[r] for r in range(m) if basis[r] >= n_struct))
        if infeas > LP_FEAS_TOL * max(1.0, float(np.abs(b).max(initial=0.0))):
            return LpSolution(INFEASIBLE, iterations=splx.iterations)
        basis = _expel_artificials(splx, basis, n_struct)
    basis = np.array(basis)

    c2 = np.zeros(ncols)
    c2[:n_struct] = c_std
    status, basis = splx.run(c2, basis, structural)
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, iterations=splx.iterations)

    lu = splx.factor(basis)
    xb = lu_solve(lu, b)
    y = lu_solve(lu, c2[basis], trans=1) * sign
    z = np.zeros(ncols)
    z[basis] = np.maximum(xb, 0.0)
    x = z[:n] - z[n:2 * n]
    sol = LpSolution(
        OPTIMAL,
        x=x,
        mu=np.maximum(-y[:mi], 0.0),
        nu=-y[mi:],
        objective=float(lp.c @ x),
        degenerate=bool(np.any(np.abs(xb) <= LP_FEAS_TOL * max(1.0, float(np.abs(b).max(initial=0.0))))),
        iterations=splx.iterations,
        basis=basis.tolist(),
    )
    res = kkt_residuals(lp, sol)
    scale = 1.0 + float(np.abs(lp.c).max(initial=0.0)) + float(np.abs(b).max(initial=0.0))
    if max(res.values()) > tol * scale:
        log.warning("lp: KKT residuals above tolerance %s", res)
    if dump_path is not None:
        _dump(dump_path, splx, basis, c2, sol, res)
    return sol


def _expel_artificials(splx, basis, n_struct):
    """Pivot zero-level artificials out of the basis where the row allows it.

    An artificial that cannot leave belongs to a redundant equality row; it
    stays basic at zero and is barred from re-entering.
    """
    basis = np.array(basis)
    for r in range(splx.m):
        if basis[r] < n_struct:
            continue
        lu = splx.factor(basis)
        row = lu_solve(lu, np.eye(splx.m)[r], trans=1) @ splx.A[:, :n_struct]
        row[basis[basis < n_struct]] = 0.0
        cand = np.flatnonzero(np.abs(row) > LP_PIVOT_TOL)
        if cand.size:
            basis[r] = int(cand[np.argmax(np.abs(row[cand]))])
    return basis


def _dump(path, splx, basis, c, sol, res):
    lu = splx.factor(basis)
    y = lu_solve(lu, c[basis], trans=1)
    d = c - splx.A.T @ y
    with open(path, "w") as fh:
        fh.write(f"status {sol.status} iterations {sol.iterations} objective {sol.objective!r}\n")
        fh.write(f"kkt {res}\n")
        fh.write("basis " + " ".join(map(str, basis)) + "\n")
        fh.write("x_basic " + " ".join(repr(v) for v in lu_solve(lu, splx.b)) + "\n")
        fh.write("reduced_costs " + " ".join(repr(v) for v in d) + "\n")
        np.savetxt(fh, np.column_stack([splx.A, splx.b]), fmt="%.17g",
                   header="tableau [A | b]")
