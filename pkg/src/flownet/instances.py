"""Random network/demand instances for property tests and experiments.

Every junction gets at least one entry cell from its own source node and every
cell routes part of its flow out of the network, so the routing is out-connected,
the aggregate demand is positive on all cells, and the demand can be scaled to a
chosen utilisation of the stability region.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import aggregate_demand
from .network import DemandProfile, NetworkSpec, RoutingMatrix, build_network
from .stability import check_necessary_condition, node_min_allocation

PHASE_KINDS = ("orthogonal", "single", "general")


@dataclass
class Instance:
    spec: NetworkSpec
    demand: DemandProfile
    load: float  # largest per-node cycle share needed to carry a

    @property
    def lam(self) -> np.ndarray:
        return self.demand.pieces[0].lam

    @property
    def routing(self) -> RoutingMatrix:
        return self.demand.pieces[0].routing


def random_phases(rng: np.random.Generator, cells: list[str], kind: str, max_phases: int = 4) -> list[list[str]]:
    """Phase lists over one node's cells.

    orthogonal: a random partition into at most max_phases blocks;
    single: one phase per cell; general: overlapping subsets covering all cells.
    """
    if kind == "single":
        return [[c] for c in cells]
    if kind == "orthogonal":
        q = int(rng.integers(1, min(max_phases, len(cells)) + 1))
        labels = rng.permutation(np.arange(len(cells)) % q)
        return [[c for c, l in zip(cells, labels) if l == b] for b in range(q)]
    if kind == "general":
        q = int(rng.integers(2, max_phases + 1))
        mask = rng.random((q, len(cells))) < 0.5
        for i in range(len(cells)):
            if not mask[:, i].any():
                mask[rng.integers(q), i] = True
        phases = [[c for c, on in zip(cells, row) if on] for row in mask]
        return [ph for ph in phases if ph]
    raise ValueError(f"phase kind must be one of {PHASE_KINDS}")


def random_network(
    rng: np.random.Generator,
    n_nodes: int = 3,
    cells_per_node: tuple[int, int] = (2, 4),
    kind: str = "orthogonal",
) -> NetworkSpec:
    junctions = [f"j{k}" for k in range(n_nodes)]
    cells, phases = [], {}
    for k, head in enumerate(junctions):
        count = int(rng.integers(cells_per_node[0], cells_per_node[1] + 1))
        ids = []
        for i in range(count):
            others = [j for j in junctions if j != head]
            if i == 0 or not others or rng.random() < 0.4:
                tail = f"s{k}"
            else:
                tail = others[int(rng.integers(len(others)))]
            cid = f"{head}_{i}"
            cells.append((cid, tail, head, float(rng.uniform(0.5, 2.0))))
            ids.append(cid)
        phases[head] = random_phases(rng, ids, kind)
    clearance = {j: float(rng.uniform(0.5, 2.0)) for j in junctions}
    nodes = junctions + [f"s{k}" for k in range(n_nodes)]
    return build_network(cells, phases, clearance, nodes=nodes)


def random_routing(rng: np.random.Generator, spec: NetworkSpec, exit_range=(0.2, 0.6)) -> RoutingMatrix:
    R = np.zeros((spec.n, spec.n))
    for i, c in enumerate(spec.cells):
        nxt = [j for j, d in enumerate(spec.cells) if d.tail == c.head]
        if not nxt:
            continue
        w = rng.random(len(nxt)) + 0.05
        R[i, nxt] = (1.0 - rng.uniform(*exit_range)) * w / w.sum()
    return RoutingMatrix(R)


def scale_to_load(spec: NetworkSpec, lam: np.ndarray, routing, load: float) -> np.ndarray:
    """Rescale lam so the busiest node needs `load` of its cycle to carry a."""
    a = aggregate_demand(lam, routing)
    need = max(node_min_allocation(spec, a, k)[0] for k in range(spec.m))
    return lam * (load / need)


def random_instance(
    rng: np.random.Generator,
    n_nodes: int = 3,
    kind: str = "orthogonal",
    load: float | tuple[float, float] = (0.3, 0.8),
    cells_per_node: tuple[int, int] = (2, 4),
) -> Instance:
    """A random network with constant demand at the given utilisation.

    Loads below 1 put the aggregate demand inside the stability region.
    """
    spec = random_network(rng, n_nodes, cells_per_node, kind)
    routing = random_routing(rng, spec)
    lam = np.zeros(spec.n)
    src = np.array([c.tail.startswith("s") for c in spec.cells])
    lam[src] = rng.uniform(0.2, 1.0, src.sum())
    rho = float(rng.uniform(*load)) if isinstance(load, tuple) else float(load)
    lam = scale_to_load(spec, lam, routing, rho)
    demand = DemandProfile.constant(lam, routing)
    if rho < 1 and not check_necessary_condition(spec, lam, routing).interior:
        raise AssertionError("scaled demand is not interior")
    return Instance(spec, demand, rho)
