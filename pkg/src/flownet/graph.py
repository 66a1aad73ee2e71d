"""Reachability and connectedness of routing matrices, and aggregate demand."""
from __future__ import annotations

from collections import deque

import numpy as np

from .errors import SingularSystem
from .network import RoutingMatrix

DEFICIT_TOL = 1e-12


def _as_matrix(routing) -> np.ndarray:
    return routing.matrix if isinstance(routing, RoutingMatrix) else np.asarray(routing, dtype=float)


def _bfs(adj: np.ndarray, sources) -> np.ndarray:
    seen = np.zeros(adj.shape[0], dtype=bool)
    queue = deque()
    for s in sources:
        if not seen[s]:
            seen[s] = True
            queue.append(s)
    while queue:
        i = queue.popleft()
        for j in np.flatnonzero(adj[i]):
            if not seen[j]:
                seen[j] = True
                queue.append(j)
    return seen


def reachable_set(routing, i: int) -> np.ndarray:
    """Boolean mask of cells reachable from cell i (including i itself)."""
    return _bfs(_as_matrix(routing) > 0, [i])


def reachable(routing, i: int, j: int) -> bool:
    return bool(reachable_set(routing, i)[j])


def reachability_matrix(routing) -> np.ndarray:
    adj = _as_matrix(routing) > 0
    return np.array([_bfs(adj, [i]) for i in range(adj.shape[0])])


def deficit_cells(routing) -> np.ndarray:
    """Cells from which a strictly positive fraction of outflow leaves the network."""
    return 1.0 - _as_matrix(routing).sum(axis=1) > DEFICIT_TOL


def is_out_connected(lam, routing) -> bool:
    R = _as_matrix(routing)
    # cells that can reach a deficit cell = reverse search from the deficit cells
    can_exit = _bfs((R > 0).T, np.flatnonzero(deficit_cells(R)))
    return bool(np.all(can_exit[np.asarray(lam) > 0]))


def routing_is_out_connected(routing) -> bool:
    R = _as_matrix(routing)
    return is_out_connected(np.ones(R.shape[0]), R)


def is_in_connected(lam, routing) -> bool:
    R = _as_matrix(routing)
    return bool(np.all(_bfs(R > 0, np.flatnonzero(np.asarray(lam) > 0))))


def aggregate_demand(lam, routing) -> np.ndarray:
    """a = (I - R^T)^{-1} lambda, solved by LU with partial pivoting."""
    R = _as_matrix(routing)
    if not routing_is_out_connected(R):
        raise SingularSystem("routing is not out-connected; I - R^T may be singular")
    lam = np.asarray(lam, dtype=float)
    return np.linalg.solve(np.eye(R.shape[0]) - R.T, lam)
