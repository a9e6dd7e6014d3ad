"""Day-long market simulation producing the congestion price matrix."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import _textio
from ._tolerances import CONGESTION_TOL
from .linalg import SpdFactor
from .dispatch import (DispatchInfeasible, MarketScenario, compute_lmp,
                       solve_dispatch)
from .network import GridTopology

log = logging.getLogger(__name__)

CONFIG_FORMAT = 1
_REDRAW = ("interval", "hourly")


@dataclass(frozen=True)
class BusRole:
    bus: int  # 0-based
    kind: str  # "G", "L" or "Z"
    bid: float = 0.0
    pmax: float = 0.0
    load: float = 0.0


@dataclass(frozen=True)
class SimulationConfig:
    buses: tuple[BusRole, ...]
    hourly_factors: tuple[float, ...]
    intervals: int = 288
    intervals_per_hour: int = 12
    bid_std: float = 2.88
    load_std: float = 3.0 ** 0.5
    bid_redraw: str = "hourly"
    load_redraw: str = "interval"
    noise_std: float = 0.0
    drop_uncongested: bool = True
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        if len(self.hourly_factors) != 24:
            raise ValueError(f"need 24 hourly factors, got {len(self.hourly_factors)}")
        if min(self.bid_std, self.load_std, self.noise_std) < 0:
            raise ValueError("standard deviations must be non-negative")
        if self.bid_redraw not in _REDRAW or self.load_redraw not in _REDRAW:
            raise ValueError(f"redraw policy must be one of {_REDRAW}")
        if self.intervals < 1 or self.intervals_per_hour < 1:
            raise ValueError("intervals and intervals_per_hour must be positive")
        for b in self.buses:
            if b.kind not in ("G", "L", "Z"):
                raise ValueError(f"bus {b.bus + 1}: unknown type {b.kind!r}")

    @classmethod
    def from_dict(cls, doc, **overrides):
        if doc.get("format") != CONFIG_FORMAT:
            raise ValueError(f"unsupported config format {doc.get('format')!r}")
        buses = tuple(
            BusRole(int(b["bus"]) - 1, b["type"], float(b.get("bid", 0.0)),
                    float(b.get("pmax", 0.0)), float(b.get("load", 0.0)))
            for b in doc["buses"]
        )
        keys = ("intervals", "intervals_per_hour", "bid_std", "load_std", "bid_redraw",
                "load_redraw", "noise_std", "drop_uncongested", "seed", "name")
        kw = {k: doc[k] for k in keys if k in doc}
        kw.update(overrides)
        return cls(buses=buses, hourly_factors=tuple(doc["hourly_factors"]), **kw)

    def to_dict(self):
        return {
            "format": CONFIG_FORMAT, "name": self.name, "intervals": self.intervals,
            "intervals_per_hour": self.intervals_per_hour, "bid_std": self.bid_std,
            "load_std": self.load_std, "hourly_factors": list(self.hourly_factors),
            "bid_redraw": self.bid_redraw, "load_redraw": self.load_redraw,
            "noise_std": self.noise_std, "drop_uncongested": self.drop_uncongested,
            "seed": self.seed,
            "buses": [
                {"bus": b.bus + 1, "type": b.kind, "bid": b.bid, "pmax": b.pmax, "load": b.load}
                for b in self.buses
            ],
        }

    def replace(self, **kw):
        return replace(self, **kw)


def load_config(path, **overrides):
    with open(path) as fh:
        return SimulationConfig.from_dict(json.load(fh), **overrides)


def ieee14_day_config(**overrides):
    """Standard 14-bus day: bus roles, mean bids and loads, the 24 hourly load factors."""
    text = resources.files("gridid.data").joinpath("ieee14_day.json").read_text()
    return SimulationConfig.from_dict(json.loads(text), **overrides)


def ieee14_dataset():
    """Shipped noiseless 14-bus day (seed 0), as written by ``save_dataset``."""
    with resources.as_file(resources.files("gridid.data").joinpath("ieee14_day_seed0.txt")) as p:
        return load_dataset(p)


def _rngs(seed):
    # one stream per consumer so e.g. toggling noise does not move the bids
    bid, load, noise = np.random.SeedSequence(seed).spawn(3)
    return np.random.default_rng(bid), np.random.default_rng(load), np.random.default_rng(noise)


def generate_scenarios(config: SimulationConfig, n_buses: int | None = None):
    """Per-interval bids and injection bounds.

    Bids are uniform with the configured mean and standard deviation
    (half-width ``std * sqrt(3)``); loads are Gaussian around the hourly
    modulated mean and enter as fixed negative injections.
    """
    nb = n_buses or (max(b.bus for b in config.buses) + 1)
    gens = [b for b in config.buses if b.kind == "G"]
    loaded = [b for b in config.buses if b.load > 0]
    bid_rng, load_rng, _ = _rngs(config.seed)
    half = config.bid_std * np.sqrt(3.0)
    gen_idx = np.array([b.bus for b in gens], dtype=int)
    bid_mean = np.array([b.bid for b in gens])
    load_idx = np.array([b.bus for b in loaded], dtype=int)
    load_mean = np.array([b.load for b in loaded])
    pmax = np.zeros(nb)
    pmax[gen_idx] = [b.pmax for b in gens]

    scenarios = []
    bids = loads = None
    for t in range(config.intervals):
        hour = (t // config.intervals_per_hour) % 24
        new_hour = t % config.intervals_per_hour == 0
        if bids is None or config.bid_redraw == "interval" or new_hour:
            bids = bid_rng.uniform(bid_mean - half, bid_mean + half)
        if loads is None or config.load_redraw == "interval" or new_hour:
            loads = load_rng.normal(load_mean * config.hourly_factors[hour], config.load_std)
        c = np.zeros(nb)
        c[gen_idx] = bids
        demand = np.zeros(nb)
        demand[load_idx] = loads
        scenarios.append(MarketScenario(c=c, p_lower=-demand, p_upper=pmax - demand))
    return scenarios


@dataclass
class PriceDataset:
    """Congestion (+ noise) prices at the non-reference buses.

    ``L`` is N x T, ``M`` holds the line multipliers ``mu_lower - mu_upper``
    and ``S_true = A' D M``.
    """

    L: np.ndarray
    M: np.ndarray
    S_true: np.ndarray
    intervals: np.ndarray
    lambda0: np.ndarray
    degenerate: np.ndarray
    seed: int = 0
    sigma_n: float = 0.0
    grid_name: str = ""
    n_simulated: int = 0
    skipped: tuple = ()
    meta: dict = field(default_factory=dict)

    @property
    def N(self):
        return self.L.shape[0]

    @property
    def T(self):
        return self.L.shape[1]

    @property
    def n_lines(self):
        return self.M.shape[0]

    def congestion_sets(self, tol=None):
        tol = CONGESTION_TOL if tol is None else tol
        return [tuple(np.flatnonzero(np.abs(col) > tol)) for col in self.M.T]

    def congested_line_set(self):
        return sorted({l for s in self.congestion_sets() for l in s})


def simulate_day(config: SimulationConfig, grid: GridTopology, lp_dump_dir=None) -> PriceDataset:
    """Run the dispatch for every interval and stack the congestion prices.

    Intervals whose dispatch is infeasible are skipped with a warning. With
    ``lp_dump_dir`` set, the final simplex tableau of every solved interval
    is written there as ``interval_<t>.txt``.
    """
    scenarios = generate_scenarios(config, grid.bus_count)
    _, _, noise_rng = _rngs(config.seed)
    inc, lap = grid.incidence, grid.laplacian
    Bfac = SpdFactor(lap.reduced)
    cols, mus, lam0, degen, kept, skipped = [], [], [], [], [], []
    n_cong = 0
    for t, sc in enumerate(scenarios):
        try:
            dump = None if lp_dump_dir is None else Path(lp_dump_dir) / f"interval_{t:04d}.txt"
            sol = solve_dispatch(grid, sc, interval=t, dump_path=dump)
        except DispatchInfeasible as exc:
            log.warning("simulate: skipped interval=%d status=%s", t, exc.status)
            skipped.append(t)
            continue
        congested = sol.congested_lines.size > 0
        n_cong += congested
        # draw for every solved interval so dropping columns leaves the rest unchanged
        z = noise_rng.standard_normal(grid.n_reduced)
        if config.drop_uncongested and not congested:
            continue
        lmp = compute_lmp(sol, grid)
        lam = lmp.congestion_part[grid.non_reference]
        if config.noise_std > 0:
            lam = lam + Bfac.solve(config.noise_std * z)
        cols.append(lam)
        mus.append(sol.mu)
        lam0.append(sol.lambda0)
        degen.append(sol.degenerate)
        kept.append(t)
    if len(skipped) == len(scenarios):
        raise RuntimeError("simulate: every interval was infeasible")
    N, nl = grid.n_reduced, grid.n_lines
    L = np.column_stack(cols) if cols else np.zeros((N, 0))
    M = np.column_stack(mus) if mus else np.zeros((nl, 0))
    S = inc.reduced.T @ (lap.D[:, None] * M)
    log.info("simulate: intervals=%d solved=%d congested=%d kept=%d",
             len(scenarios), len(scenarios) - len(skipped), n_cong, len(kept))
    return PriceDataset(
        L=L, M=M, S_true=S, intervals=np.array(kept, dtype=int),
        lambda0=np.array(lam0), degenerate=np.array(degen, dtype=bool),
        seed=config.seed, sigma_n=config.noise_std, grid_name=grid.name,
        n_simulated=len(scenarios), skipped=tuple(skipped),
        meta={"congested_intervals": int(n_cong)},
    )


def save_dataset(ds: PriceDataset, path, manifest=None):
    header = {
        "N": ds.N, "L_lines": ds.n_lines, "T": ds.T, "seed": ds.seed,
        "sigma_n": ds.sigma_n, "grid": ds.grid_name, "n_simulated": ds.n_simulated,
        "skipped": list(ds.skipped), "meta": ds.meta,
    }
    if manifest is not None:
        header["manifest"] = manifest
    _textio.write_blocks(path, "dataset", header, {
        "intervals": ds.intervals[None, :],
        "L": ds.L, "M": ds.M, "S_true": ds.S_true,
        "lambda0": ds.lambda0[None, :],
        "degenerate": ds.degenerate[None, :].astype(float),
    })


def load_dataset(path) -> PriceDataset:
    header, blocks = _textio.read_blocks(path, "dataset")
    try:
        N, nl, T = int(header["N"]), int(header["L_lines"]), int(header["T"])
    except (KeyError, TypeError, ValueError) as exc:
        raise _textio.SchemaError(f"{path}: header lacks N/L_lines/T") from exc
    req = _textio.require_shape
    return PriceDataset(
        L=req(blocks, "L", (N, T), path),
        M=req(blocks, "M", (nl, T), path),
        S_true=req(blocks, "S_true", (N, T), path),
        intervals=req(blocks, "intervals", (1, T), path)[0].astype(int),
        lambda0=req(blocks, "lambda0", (1, T), path)[0],
        degenerate=req(blocks, "degenerate", (1, T), path)[0].astype(bool),
        seed=header.get("seed", 0), sigma_n=float(header.get("sigma_n", 0.0)),
        grid_name=header.get("grid", ""), n_simulated=int(header.get("n_simulated", 0)),
        skipped=tuple(header.get("skipped", ())), meta=header.get("meta", {}),
    )
