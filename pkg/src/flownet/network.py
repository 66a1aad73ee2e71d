"""Static network description: topology, capacities, phases, routing, demand.

Cells are indexed in insertion order and every vector/matrix in the package
uses that ordering. Global phases are numbered node by node (node order, then
the local phase order of that node).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ParseError

ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Cell:
    id: str
    tail: str
    head: str
    capacity: float


@dataclass(frozen=True, eq=False)
class NetworkSpec:
    nodes: tuple[str, ...]
    cells: tuple[Cell, ...]
    phases: Mapping[str, tuple[tuple[str, ...], ...]]
    clearance: Mapping[str, float]

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "cells", tuple(self.cells))
        if len(set(self.nodes)) != len(self.nodes):
            raise ParseError("duplicate node identifiers")
        ids = [c.id for c in self.cells]
        if len(set(ids)) != len(ids):
            raise ParseError("duplicate cell identifiers")
        known = set(self.nodes)
        for c in self.cells:
            for end in (c.tail, c.head):
                if end not in known:
                    raise ParseError(f"cell {c.id!r}: unknown node {end!r}")
        phases = {}
        id_set = set(ids)
        for k, plist in self.phases.items():
            if k not in known:
                raise ParseError(f"phases: unknown node {k!r}")
            phases[k] = tuple(tuple(q) for q in plist)
            for q in phases[k]:
                for cid in q:
                    if cid not in id_set:
                        raise ParseError(f"phases[{k!r}]: unknown cell {cid!r}")
        object.__setattr__(self, "phases", phases)
        for k in self.clearance:
            if k not in known:
                raise ParseError(f"clearance: unknown node {k!r}")
        object.__setattr__(self, "clearance", {k: float(v) for k, v in self.clearance.items()})

    def __eq__(self, other):
        if not isinstance(other, NetworkSpec):
            return NotImplemented
        return network_to_dict(self) == network_to_dict(other)

    __hash__ = None

    @property
    def n(self) -> int:
        return len(self.cells)

    @property
    def m(self) -> int:
        return len(self.nodes)

    @cached_property
    def cell_index(self) -> dict[str, int]:
        return {c.id: i for i, c in enumerate(self.cells)}

    @cached_property
    def node_index(self) -> dict[str, int]:
        return {k: i for i, k in enumerate(self.nodes)}

    @cached_property
    def capacity(self) -> np.ndarray:
        return _frozen(np.array([c.capacity for c in self.cells], dtype=float))

    @cached_property
    def head_idx(self) -> np.ndarray:
        return _frozen(np.array([self.node_index[c.head] for c in self.cells], dtype=int))

    @cached_property
    def tail_idx(self) -> np.ndarray:
        return _frozen(np.array([self.node_index[c.tail] for c in self.cells], dtype=int))

    @cached_property
    def node_cells(self) -> tuple[np.ndarray, ...]:
        """Incoming cell indices per node (E_k), in cell order."""
        return tuple(np.flatnonzero(self.head_idx == k) for k in range(self.m))

    @cached_property
    def phase_slices(self) -> tuple[slice, ...]:
        out, start = [], 0
        for k in self.nodes:
            p_k = len(self.phases.get(k, ()))
            out.append(slice(start, start + p_k))
            start += p_k
        return tuple(out)

    @property
    def p(self) -> int:
        return self.phase_slices[-1].stop if self.m else 0

    @cached_property
    def phase_node(self) -> np.ndarray:
        out = np.empty(self.p, dtype=int)
        for k, sl in enumerate(self.phase_slices):
            out[sl] = k
        return _frozen(out)

    @cached_property
    def xi(self) -> np.ndarray:
        """Clearance per node; NaN where none was given."""
        return _frozen(np.array([self.clearance.get(k, np.nan) for k in self.nodes]))

    @cached_property
    def P(self) -> np.ndarray:
        return phase_matrix(self)

    def local_phase_matrix(self, k: int) -> np.ndarray:
        """P^(k): rows are the node's incoming cells, columns its phases."""
        return self.P[np.ix_(self.node_cells[k], np.arange(self.p)[self.phase_slices[k]])]

    @cached_property
    def node_is_orthogonal(self) -> np.ndarray:
        rows = self.P.sum(axis=1)
        return _frozen(np.array([bool(np.all(rows[cells] == 1)) for cells in self.node_cells]))

    @property
    def is_orthogonal(self) -> bool:
        return bool(np.all(self.P.sum(axis=1) == 1))

    @property
    def has_single_cell_phases(self) -> bool:
        """Every phase holds exactly one cell and every cell exactly one phase."""
        return self.is_orthogonal and bool(np.all(self.P.sum(axis=0) == 1))

    def vector(self, values: Mapping[str, float] | None, default: float = 0.0) -> np.ndarray:
        out = np.full(self.n, default, dtype=float)
        for cid, v in (values or {}).items():
            if cid not in self.cell_index:
                raise ParseError(f"unknown cell {cid!r}")
            out[self.cell_index[cid]] = float(v)
        return out

    def phase_labels(self) -> list[tuple[str, int]]:
        """(node, 1-based local phase number) for each global phase."""
        return [(k, q + 1) for k in self.nodes for q in range(len(self.phases.get(k, ())))]


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def phase_matrix(spec: NetworkSpec) -> np.ndarray:
    """Global n x p binary phase matrix; entry (i, q) is 1 iff cell i is in phase q."""
    P = np.zeros((spec.n, spec.p))
    col = 0
    for k in spec.nodes:
        for q in spec.phases.get(k, ()):
            for cid in q:
                P[spec.cell_index[cid], col] = 1.0
            col += 1
    return _frozen(P)


@dataclass(frozen=True, eq=False)
class RoutingMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        R = np.array(self.matrix, dtype=float)
        if R.ndim != 2 or R.shape[0] != R.shape[1]:
            raise ParseError(f"routing matrix must be square, got shape {R.shape}")
        object.__setattr__(self, "matrix", _frozen(R))

    @classmethod
    def zeros(cls, n: int) -> "RoutingMatrix":
        return cls(np.zeros((n, n)))

    @classmethod
    def from_entries(cls, spec: NetworkSpec, entries: Mapping[tuple[str, str], float]) -> "RoutingMatrix":
        R = np.zeros((spec.n, spec.n))
        for (a, b), f in entries.items():
            for cid in (a, b):
                if cid not in spec.cell_index:
                    raise ParseError(f"routing: unknown cell {cid!r}")
            R[spec.cell_index[a], spec.cell_index[b]] = float(f)
        return cls(R)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def row_sums(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    def exit_fraction(self) -> np.ndarray:
        return 1.0 - self.row_sums()

    def entries(self, spec: NetworkSpec) -> dict[tuple[str, str], float]:
        ids = [c.id for c in spec.cells]
        return {(ids[i], ids[j]): float(self.matrix[i, j]) for i, j in zip(*np.nonzero(self.matrix))}

    def __eq__(self, other):
        if not isinstance(other, RoutingMatrix):
            return NotImplemented
        return self.matrix.shape == other.matrix.shape and bool(np.array_equal(self.matrix, other.matrix))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class DemandPiece:
    start: float
    lam: np.ndarray
    routing: RoutingMatrix

    def __post_init__(self):
        object.__setattr__(self, "start", float(self.start))
        object.__setattr__(self, "lam", _frozen(np.array(self.lam, dtype=float)))


@dataclass(frozen=True, eq=False)
class DemandProfile:
    """Piecewise-constant inflow and routing; piece k holds on [start_k, start_{k+1})."""

    pieces: tuple[DemandPiece, ...]

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))
        if not self.pieces:
            raise ParseError("demand profile has no pieces")

    @classmethod
    def constant(cls, lam, routing: RoutingMatrix) -> "DemandProfile":
        return cls((DemandPiece(0.0, lam, routing),))

    def starts(self) -> np.ndarray:
        return np.array([pc.start for pc in self.pieces])

    def index_at(self, t: float) -> int:
        return max(int(np.searchsorted(self.starts(), t, side="right")) - 1, 0)

    def piece_at(self, t: float) -> DemandPiece:
        return self.pieces[self.index_at(t)]

    def scaled(self, factor: float) -> "DemandProfile":
        """Same routing and piece times, every inflow multiplied by factor."""
        if not factor >= 0:
            raise ValueError("scale factor must be nonnegative")
        return DemandProfile(tuple(DemandPiece(pc.start, pc.lam * factor, pc.routing) for pc in self.pieces))

    def __eq__(self, other):
        if not isinstance(other, DemandProfile):
            return NotImplemented
        return len(self.pieces) == len(other.pieces) and all(
            a.start == b.start and np.array_equal(a.lam, b.lam) and a.routing == b.routing
            for a, b in zip(self.pieces, other.pieces)
        )

    __hash__ = None


# --- validation ------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str

    def __str__(self):
        return f"{self.kind}: {self.detail}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def add(self, kind: str, detail: str):
        self.violations.append(Violation(kind, detail))

    def extend(self, other: "ValidationReport"):
        self.violations.extend(other.violations)


def validate(spec: NetworkSpec, routing: RoutingMatrix | None = None) -> ValidationReport:
    """List every violated invariant of the network and (optionally) a routing matrix."""
    rep = ValidationReport()
    for c in spec.cells:
        if c.tail == c.head:
            rep.add("self-loop", f"cell {c.id!r} starts and ends at node {c.head!r}")
        if not (np.isfinite(c.capacity) and c.capacity > 0):
            rep.add("capacity", f"cell {c.id!r} has capacity {c.capacity!r}; must be > 0")
    for k in spec.nodes:
        for q_no, q in enumerate(spec.phases.get(k, ()), start=1):
            if not q:
                rep.add("empty-phase", f"node {k!r} phase {q_no} is empty")
            for cid in q:
                if spec.cells[spec.cell_index[cid]].head != k:
                    rep.add("phase-head", f"node {k!r} phase {q_no} contains cell {cid!r} not entering {k!r}")
    coverage = spec.P.sum(axis=1)
    for i, c in enumerate(spec.cells):
        if coverage[i] < 1:
            rep.add("uncovered-cell", f"cell {c.id!r} belongs to no phase of node {c.head!r}")
    for k_idx, k in enumerate(spec.nodes):
        needs_xi = len(spec.node_cells[k_idx]) > 0 or k in spec.clearance
        if needs_xi:
            xi = spec.clearance.get(k)
            if xi is None or not (np.isfinite(xi) and xi > 0):
                rep.add("clearance", f"node {k!r} clearance {xi!r}; must be > 0")
    if routing is not None:
        rep.extend(validate_routing(spec, routing))
    return rep


def validate_routing(spec: NetworkSpec, routing: RoutingMatrix, label: str = "routing") -> ValidationReport:
    rep = ValidationReport()
    R = routing.matrix
    if R.shape != (spec.n, spec.n):
        rep.add("shape", f"{label} has shape {R.shape}, expected {(spec.n, spec.n)}")
        return rep
    ids = [c.id for c in spec.cells]
    bad = np.argwhere((R < 0) | (R > 1) | ~np.isfinite(R))
    for i, j in bad:
        rep.add("routing-range", f"{label}[{ids[i]!r}, {ids[j]!r}] = {R[i, j]!r} outside [0, 1]")
    for i, j in np.argwhere(R > 0):
        if spec.cells[i].head != spec.cells[j].tail:
            rep.add(
                "routing-topology",
                f"{label}[{ids[i]!r}, {ids[j]!r}] > 0 but head of {ids[i]!r} is not tail of {ids[j]!r}",
            )
    sums = R.sum(axis=1)
    for i in np.flatnonzero(sums > 1 + ROW_SUM_TOL):
        rep.add("row-sum", f"{label} row {ids[i]!r} sums to {sums[i]!r} > 1")
    return rep


def validate_demand(spec: NetworkSpec, demand: DemandProfile) -> ValidationReport:
    rep = ValidationReport()
    starts = demand.starts()
    if starts[0] != 0.0:
        rep.add("piece-start", f"first piece starts at {starts[0]!r}, expected 0")
    if np.any(np.diff(starts) <= 0):
        rep.add("piece-start", "piece start times are not strictly increasing")
    for k, pc in enumerate(demand.pieces):
        if pc.lam.shape != (spec.n,):
            rep.add("shape", f"piece {k} inflow has shape {pc.lam.shape}, expected {(spec.n,)}")
        elif np.any(pc.lam < 0) or not np.all(np.isfinite(pc.lam)):
            rep.add("negative-inflow", f"piece {k} has a negative or non-finite inflow")
        rep.extend(validate_routing(spec, pc.routing, label=f"piece {k} routing"))
    return rep


# --- file formats ----------------------------------------------------------


def network_to_dict(spec: NetworkSpec) -> dict:
    return {
        "nodes": list(spec.nodes),
        "cells": [{"id": c.id, "tail": c.tail, "head": c.head, "capacity": c.capacity} for c in spec.cells],
        "phases": {k: [list(q) for q in spec.phases[k]] for k in spec.nodes if spec.phases.get(k)},
        "clearance": {k: spec.clearance[k] for k in spec.nodes if k in spec.clearance},
    }


def parse_network(data: Mapping, source: str = "network") -> NetworkSpec:
    try:
        nodes = [str(k) for k in data["nodes"]]
        cells = [
            Cell(str(c["id"]), str(c["tail"]), str(c["head"]), float(c["capacity"]))
            for c in data["cells"]
        ]
        phases = {str(k): [[str(cid) for cid in q] for q in v] for k, v in data.get("phases", {}).items()}
        clearance = {str(k): float(v) for k, v in data.get("clearance", {}).items()}
    except KeyError as e:
        raise ParseError(f"{source}: missing key {e.args[0]!r}") from None
    except (TypeError, ValueError) as e:
        raise ParseError(f"{source}: {e}") from None
    try:
        return NetworkSpec(tuple(nodes), tuple(cells), phases, clearance)
    except ParseError as e:
        raise ParseError(f"{source}: {e}") from None


def demand_to_dict(spec: NetworkSpec, demand: DemandProfile) -> dict:
    ids = [c.id for c in spec.cells]
    pieces = []
    for pc in demand.pieces:
        pieces.append({
            "start": pc.start,
            "lambda": {ids[i]: float(pc.lam[i]) for i in np.flatnonzero(pc.lam)},
            "routing": [
                {"from": a, "to": b, "fraction": f} for (a, b), f in pc.routing.entries(spec).items()
            ],
        })
    return {"pieces": pieces}


def parse_demand(spec: NetworkSpec, data: Mapping, source: str = "demand") -> DemandProfile:
    try:
        raw = data["pieces"]
        pieces = []
        for k, pc in enumerate(raw):
            where = f"{source}: pieces[{k}]"
            try:
                lam = spec.vector(pc.get("lambda", {}))
                entries = {(str(r["from"]), str(r["to"])): float(r["fraction"]) for r in pc.get("routing", [])}
                routing = RoutingMatrix.from_entries(spec, entries)
            except ParseError as e:
                raise ParseError(f"{where}: {e}") from None
            except KeyError as e:
                raise ParseError(f"{where}: missing key {e.args[0]!r}") from None
            pieces.append(DemandPiece(float(pc["start"]), lam, routing))
    except KeyError as e:
        raise ParseError(f"{source}: missing key {e.args[0]!r}") from None
    except (TypeError, ValueError) as e:
        raise ParseError(f"{source}: {e}") from None
    return DemandProfile(tuple(pieces))


def _read_json(path: str | Path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as e:
        raise ParseError(f"{path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: invalid JSON ({e})") from None


def load_network(path: str | Path) -> NetworkSpec:
    return parse_network(_read_json(path), source=str(path))


def load_demand(spec: NetworkSpec, path: str | Path) -> DemandProfile:
    return parse_demand(spec, _read_json(path), source=str(path))


def dump_network(spec: NetworkSpec, path: str | Path):
    Path(path).write_text(json.dumps(network_to_dict(spec), indent=2) + "\n")


def dump_demand(spec: NetworkSpec, demand: DemandProfile, path: str | Path):
    Path(path).write_text(json.dumps(demand_to_dict(spec, demand), indent=2) + "\n")


def build_network(
    cells: Sequence[tuple[str, str, str, float]],
    phases: Mapping[str, Sequence[Sequence[str]]],
    clearance: Mapping[str, float] | float = 1.0,
    nodes: Sequence[str] | None = None,
) -> NetworkSpec:
    """Convenience constructor; nodes default to first-appearance order."""
    if nodes is None:
        seen: dict[str, None] = {}
        for _, tail, head, _ in cells:
            seen.setdefault(tail)
            seen.setdefault(head)
        nodes = list(seen)
    if not isinstance(clearance, Mapping):
        heads = {h for _, _, h, _ in cells}
        clearance = {k: float(clearance) for k in nodes if k in heads}
    return NetworkSpec(
        tuple(nodes),
        tuple(Cell(*c) for c in cells),
        {k: [list(q) for q in v] for k, v in phases.items()},
        dict(clearance),
    )
