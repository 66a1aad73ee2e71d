"""Dense primal simplex for small problems in the form

    maximize c^T x  subject to  A x <= b,  x >= 0,  with b >= 0,

so that the all-slack basis is feasible and no phase one is needed. Entering and
leaving variables follow Bland's smallest-index rule, which rules out cycling.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LPUnbounded, SolverError

OPT_TOL = 1e-9
PIVOT_TOL = 1e-12


@dataclass
class LPResult:
    x: np.ndarray
    value: float
    duals: np.ndarray
    iterations: int


def simplex_max(c, A, b, tol: float = OPT_TOL, max_iter: int = 50_000) -> LPResult:
    c = np.asarray(c, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if b.shape != (m,) or c.shape != (n,):
        raise ValueError("inconsistent LP dimensions")
    if np.any(b < 0):
        raise ValueError("simplex_max needs b >= 0 (slack basis must be feasible)")

    # rows 0..m-1: constraints [A | I | b]; row m: reduced costs [c | 0 | -obj]
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = c
    basis = list(range(n, n + m))

    for it in range(max_iter):
        reduced = T[m, :-1]
        candidates = np.flatnonzero(reduced > tol)
        if candidates.size == 0:
            break
        j = int(candidates[0])
        col = T[:m, j]
        rows = np.flatnonzero(col > PIVOT_TOL)
        if rows.size == 0:
            raise LPUnbounded(f"objective unbounded along variable {j}")
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        tied = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
        r = int(min(tied, key=lambda i: basis[i]))
        T[r] /= T[r, j]
        for i in range(m + 1):
            if i != r and T[i, j] != 0.0:
                T[i] -= T[i, j] * T[r]
        basis[r] = j
    else:
        raise SolverError(f"simplex did not terminate in {max_iter} pivots")

    x = np.zeros(n + m)
    x[basis] = T[:m, -1]
    return LPResult(x=x[:n], value=float(-T[m, -1]), duals=-T[m, n:n + m].copy(), iterations=it)
