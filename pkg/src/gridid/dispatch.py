"""Network-constrained economic dispatch and locational marginal prices."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import lp
from ._tolerances import CONGESTION_TOL, LP_FEAS_TOL
from .linalg import SpdFactor
from .network import GridTopology


class DispatchInfeasible(RuntimeError):
    def __init__(self, status, interval=None):
        where = "" if interval is None else f" at interval {interval}"
        super().__init__(f"dispatch LP is {status}{where}")
        self.status = status
        self.interval = interval


@dataclass(frozen=True)
class MarketScenario:
    """Bids and injection bounds for one interval (MW; loads are negative)."""

    c: np.ndarray
    p_lower: np.ndarray
    p_upper: np.ndarray

    def __post_init__(self):
        for name in ("c", "p_lower", "p_upper"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (self.c.shape == self.p_lower.shape == self.p_upper.shape):
            raise ValueError("c, p_lower, p_upper must have equal length")
        if np.any(self.p_lower > self.p_upper):
            raise ValueError("p_lower exceeds p_upper")

    @property
    def balance_possible(self):
        return self.p_lower.sum() <= 0.0 <= self.p_upper.sum()


@dataclass
class DispatchSolution:
    p: np.ndarray  # injections, all N+1 buses
    theta: np.ndarray  # phases, reference bus at 0
    lambda0: float
    mu_lower: np.ndarray
    mu_upper: np.ndarray
    degenerate: bool
    objective: float

    @property
    def mu(self):
        return self.mu_lower - self.mu_upper

    @property
    def congested_lines(self):
        return np.flatnonzero(np.abs(self.mu) > CONGESTION_TOL)


@dataclass
class LmpVector:
    full: np.ndarray
    congestion_part: np.ndarray  # all N+1 buses, zero at the reference
    noise_part: np.ndarray


@lru_cache(maxsize=16)
def shift_factors(grid: GridTopology) -> np.ndarray:
    """D A B^-1: non-reference injections to line flows. Cached per grid."""
    inc, lap = grid.incidence, grid.laplacian
    fac = SpdFactor(lap.reduced)
    # (D A B^-1)' = B^-1 A' D
    return fac.solve(inc.reduced.T * lap.D).T


def assemble_dispatch_lp(grid: GridTopology, scenario: MarketScenario):
    """Dispatch LP over the buses whose injection is not pinned.

    Returns ``(program, free_buses, fixed_injection)``. Pinned injections
    (fixed loads, zero-injection buses) are folded into the right-hand sides,
    which keeps the LP small and avoids spurious degeneracy from
    ``p_lower == p_upper`` rows.
    """
    nb = grid.bus_count
    if scenario.c.size != nb:
        raise ValueError(f"scenario has {scenario.c.size} buses, grid has {nb}")
    SF = np.zeros((grid.n_lines, nb))
    SF[:, grid.non_reference] = shift_factors(grid)
    free = np.flatnonzero(scenario.p_upper - scenario.p_lower > LP_FEAS_TOL)
    fixed = np.where(np.isin(np.arange(nb), free), 0.0, scenario.p_lower)
    base_flow = SF @ fixed
    fbar = grid.flow_limits
    k = free.size
    Sf = SF[:, free]
    G = np.vstack([np.eye(k), -np.eye(k), Sf, -Sf])
    h = np.concatenate([
        scenario.p_upper[free], -scenario.p_lower[free],
        fbar - base_flow, fbar + base_flow,
    ])
    program = lp.LinearProgram(
        c=scenario.c[free], G=G, h=h, E=np.ones((1, k)), f=[-fixed.sum()],
    )
    return program, free, fixed


def solve_dispatch(grid: GridTopology, scenario: MarketScenario, interval=None,
                   tol=lp.LP_KKT_TOL, dump_path=None) -> DispatchSolution:
    program, free, fixed = assemble_dispatch_lp(grid, scenario)
    if free.size == 0:
        raise DispatchInfeasible("without dispatchable injections", interval)
    sol = lp.solve(program, tol=tol, dump_path=dump_path)
    if not sol.optimal:
        raise DispatchInfeasible(sol.status, interval)
    k, nl = free.size, grid.n_lines
    p = fixed.copy()
    p[free] = sol.x
    mu_upper = sol.mu[2 * k:2 * k + nl]
    mu_lower = sol.mu[2 * k + nl:]
    theta = np.zeros(grid.bus_count)
    theta[grid.non_reference] = SpdFactor(grid.laplacian.reduced).solve(p[grid.non_reference])
    # nu is the multiplier of 1'p = const; lambda0 = -nu makes the marginal
    # unit's offer the system price
    return DispatchSolution(
        p=p, theta=theta, lambda0=float(-sol.nu[0]), mu_lower=mu_lower,
        mu_upper=mu_upper, degenerate=sol.degenerate,
        objective=float(scenario.c @ p),
    )


def congestion_component(grid: GridTopology, mu) -> np.ndarray:
    """B^-1 A' D mu at the non-reference buses."""
    return shift_factors(grid).T @ np.asarray(mu, dtype=float)


def compute_lmp(sol: DispatchSolution, grid: GridTopology, noise=None) -> LmpVector:
    cong = np.zeros(grid.bus_count)
    cong[grid.non_reference] = congestion_component(grid, sol.mu)
    w = np.zeros(grid.bus_count) if noise is None else np.asarray(noise, dtype=float)
    if w.shape != cong.shape:
        raise ValueError(f"noise must have length {grid.bus_count}")
    return LmpVector(sol.lambda0 + cong + w, cong, w)
