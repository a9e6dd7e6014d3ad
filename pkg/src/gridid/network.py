"""Grid graph, incidence and weighted Laplacian matrices under the DC model.

Buses are 0-based inside the library. Grid description files and the CLI use
1-based bus numbers, which is what utility data sets publish.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

GRID_FORMAT = 1


class GridError(ValueError):
    """Invalid grid description (bad endpoints, reactances, connectivity)."""


class Line(NamedTuple):
    from_bus: int
    to_bus: int
    x: float
    fmax: float


def _components(n_buses, edges):
    parent = list(range(n_buses))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    groups = {}
    for i in range(n_buses):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


@dataclass(frozen=True)
class GridTopology:
    """Buses, directed lines with reactances and limits, and a reference bus.

    Parallel lines between the same (unordered) bus pair are merged into one
    equivalent line: susceptances add, flow limits add. The Laplacian cannot
    tell parallel lines apart, so nothing downstream loses information.
    """

    bus_count: int
    lines: tuple[Line, ...]
    reference_bus: int = 0
    name: str = ""
    merged_from: tuple[tuple[int, ...], ...] = field(default=(), repr=False)

    def __post_init__(self):
        if int(self.bus_count) < 2:
            raise GridError(f"need at least 2 buses, got {self.bus_count}")
        if not 0 <= self.reference_bus < self.bus_count:
            raise GridError(f"reference bus {self.reference_bus} out of range")
        raw = [Line(int(a), int(b), float(x), float(f)) for a, b, x, f in self.lines]
        if not raw:
            raise GridError("grid has no lines")
        for k, ln in enumerate(raw):
            if not (0 <= ln.from_bus < self.bus_count and 0 <= ln.to_bus < self.bus_count):
                raise GridError(f"line {k} has an endpoint outside 0..{self.bus_count - 1}")
            if ln.from_bus == ln.to_bus:
                raise GridError(f"line {k} is a self-loop at bus {ln.from_bus}")
            if not (np.isfinite(ln.x) and ln.x > 0):
                raise GridError(f"line {k} has non-positive reactance {ln.x}")
            if not (np.isfinite(ln.fmax) and ln.fmax > 0):
                raise GridError(f"line {k} has non-positive flow limit {ln.fmax}")

        merged, origin, seen = [], [], {}
        for k, ln in enumerate(raw):
            key = frozenset((ln.from_bus, ln.to_bus))
            if key in seen:
                j = seen[key]
                prev = merged[j]
                susceptance = 1.0 / prev.x + 1.0 / ln.x
                merged[j] = prev._replace(x=1.0 / susceptance, fmax=prev.fmax + ln.fmax)
                origin[j] = origin[j] + (k,)
            else:
                seen[key] = len(merged)
                merged.append(ln)
                origin.append((k,))
        object.__setattr__(self, "lines", tuple(merged))
        object.__setattr__(self, "merged_from", tuple(origin))

        comps = _components(self.bus_count, [(ln.from_bus, ln.to_bus) for ln in merged])
        if len(comps) > 1:
            main = next(c for c in comps if self.reference_bus in c)
            stray = [c for c in comps if c is not main]
            raise GridError(
                "grid is disconnected; buses not reachable from the reference bus: "
                + ", ".join(str(c) for c in stray)
            )

    @property
    def n_lines(self):
        return len(self.lines)

    @property
    def n_reduced(self):
        """Number of non-reference buses (N)."""
        return self.bus_count - 1

    @property
    def reactances(self):
        return np.array([ln.x for ln in self.lines])

    @property
    def flow_limits(self):
        return np.array([ln.fmax for ln in self.lines])

    @property
    def non_reference(self):
        """Indices of the non-reference buses, in order."""
        return np.delete(np.arange(self.bus_count), self.reference_bus)

    @cached_property
    def incidence(self):
        return build_incidence(self)

    @cached_property
    def laplacian(self):
        return weighted_laplacian(self.incidence, self.reactances)

    # -- serialization -----------------------------------------------------

    def to_dict(self):
        return {
            "format": GRID_FORMAT,
            "name": self.name,
            "buses": self.bus_count,
            "reference": self.reference_bus + 1,
            "lines": [
                {"from": ln.from_bus + 1, "to": ln.to_bus + 1, "x": ln.x, "fmax": ln.fmax}
                for ln in self.lines
            ],
        }

    @classmethod
    def from_dict(cls, doc):
        if doc.get("format") != GRID_FORMAT:
            raise GridError(f"unsupported grid format {doc.get('format')!r}, expected {GRID_FORMAT}")
        try:
            lines = [
                (int(e["from"]) - 1, int(e["to"]) - 1, float(e["x"]), float(e["fmax"]))
                for e in doc["lines"]
            ]
            return cls(
                bus_count=int(doc["buses"]),
                lines=tuple(lines),
                reference_bus=int(doc.get("reference", 1)) - 1,
                name=str(doc.get("name", "")),
            )
        except (KeyError, TypeError) as exc:
            raise GridError(f"malformed grid description: {exc!r}") from exc


def load_grid(path):
    with open(path) as fh:
        return GridTopology.from_dict(json.load(fh))


def save_grid(grid, path):
    Path(path).write_text(json.dumps(grid.to_dict(), indent=2) + "\n")


def ieee14():
    """The IEEE 14-bus test case with the 20 line flow limits used for pricing."""
    text = resources.files("gridid.data").joinpath("ieee14.json").read_text()
    return GridTopology.from_dict(json.loads(text))


class IncidenceMatrix(NamedTuple):
    full: np.ndarray  # L x (N+1)
    reduced: np.ndarray  # L x N, reference column removed
    reference_bus: int


class LaplacianPair(NamedTuple):
    full: np.ndarray
    reduced: np.ndarray
    D: np.ndarray  # line susceptances 1/x_l (the diagonal of D)


def build_incidence(topology: GridTopology) -> IncidenceMatrix:
    """Branch-bus incidence: +1 at the from-bus, -1 at the to-bus of each line."""
    A = np.zeros((topology.n_lines, topology.bus_count))
    for row, ln in enumerate(topology.lines):
        A[row, ln.from_bus] = 1.0
        A[row, ln.to_bus] = -1.0
    reduced = np.delete(A, topology.reference_bus, axis=1)
    return IncidenceMatrix(A, reduced, topology.reference_bus)


def weighted_laplacian(incidence: IncidenceMatrix, reactances: Sequence[float]) -> LaplacianPair:
    x = np.asarray(reactances, dtype=float)
    if x.shape != (incidence.full.shape[0],):
        raise ValueError(
            f"expected {incidence.full.shape[0]} reactances, got shape {x.shape}"
        )
    if not np.all(np.isfinite(x) & (x > 0)):
        raise GridError("reactances must be finite and strictly positive")
    d = 1.0 / x
    full = incidence.full.T @ (d[:, None] * incidence.full)
    reduced = incidence.reduced.T @ (d[:, None] * incidence.reduced)
    return LaplacianPair(full, reduced, d)


def dc_flows(incidence: IncidenceMatrix, reactances, phases) -> np.ndarray:
    """Line flows f = D A theta for a full (N+1) phase vector."""
    theta = np.asarray(phases, dtype=float)
    if theta.shape != (incidence.full.shape[1],):
        raise ValueError(
            f"phase vector must have length {incidence.full.shape[1]}, got {theta.shape}"
        )
    return (incidence.full @ theta) / np.asarray(reactances, dtype=float)
