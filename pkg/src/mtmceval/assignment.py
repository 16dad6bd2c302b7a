"""Minimum-cost one-to-one assignment on a dense cost matrix.

Shortest augmenting path with dual potentials (Jonker-Volgenant family),
vectorized over columns. Integral inputs are solved in int64 so totals are
exact; anything else runs in float64.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import ValidationError

_INT_INF = np.int64(2**62)


class Assignment(NamedTuple):
    mapping: dict[int, int]
    total_cost: int | float


def as_cost_matrix(costs) -> np.ndarray:
    """Validate ``costs`` and return it as int64 when integral, else float64."""
    m = np.asarray(costs)
    if m.ndim != 2:
        raise ValidationError(f"cost matrix must be 2-D, got shape {m.shape}")
    if m.dtype == bool:
        m = m.astype(np.int64)
    if np.issubdtype(m.dtype, np.integer):
        if m.size and m.min() < 0:
            raise ValidationError("cost matrix has a negative entry")
        return m.astype(np.int64, copy=False)
    m = m.astype(np.float64, copy=False)
    if m.size:
        if not np.all(np.isfinite(m)):
            raise ValidationError("cost matrix has a non-finite entry")
        if m.min() < 0:
            raise ValidationError("cost matrix has a negative entry")
        if m.max() < 2.0**52 and np.all(m == np.floor(m)):
            return m.astype(np.int64)
    return m


def linear_assignment(costs) -> tuple[np.ndarray, np.ndarray]:
    """Solve a rectangular assignment; returns matched ``(rows, cols)``.

    Every row of the smaller dimension is assigned. Rows are returned in
    ascending order.
    """
    m = as_cost_matrix(costs)
    if m.shape[0] > m.shape[1]:
        cols, rows = _solve(np.ascontiguousarray(m.T))
        order = np.argsort(rows, kind="stable")
        return rows[order], cols[order]
    return _solve(m)


def solve_min_cost_assignment(costs) -> Assignment:
    """Optimal bijection of a square matrix with its total cost. A
    rectangular matrix gets every row of its smaller side assigned."""
    m = as_cost_matrix(costs)
    rows, cols = linear_assignment(m)
    total = m[rows, cols].sum() if rows.size else m.dtype.type(0)
    total = int(total) if m.dtype == np.int64 else float(total)
    return Assignment(dict(zip(rows.tolist(), cols.tolist())), total)


def _solve(c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    nr, nc = c.shape
    if nr == 0:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    integral = c.dtype == np.int64
    inf = _INT_INF if integral else np.inf
    zero = c.dtype.type(0)

    u = np.zeros(nr, c.dtype)
    v = np.zeros(nc, c.dtype)
    col4row = np.full(nr, -1, np.int64)
    row4col = np.full(nc, -1, np.int64)

    # Column reduction seeds a feasible dual and tight edges for square
    # problems. Rectangular problems need v == 0 on unassigned columns.
    if nr == nc:
        v = c.min(axis=0)
        best_row = c.argmin(axis=0)
        for j in range(nc):
            i = best_row[j]
            if col4row[i] == -1:
                col4row[i] = j
                row4col[j] = i

    shortest = np.empty(nc, c.dtype)
    path = np.empty(nc, np.int64)
    scanned_col = np.empty(nc, bool)
    scanned_row = np.empty(nr, bool)

    for cur in range(nr):
        if col4row[cur] != -1:
            continue
        shortest.fill(inf)
        path.fill(-1)
        scanned_col.fill(False)
        scanned_row.fill(False)
        i = cur
        min_val = zero
        sink = -1
        while sink == -1:
            scanned_row[i] = True
            reduced = min_val + c[i] - u[i] - v
            better = (reduced < shortest) & ~scanned_col
            shortest[better] = reduced[better]
            path[better] = i
            masked = np.where(scanned_col, inf, shortest)
            j = int(masked.argmin())
            min_val = masked[j]
            if min_val == inf:
                raise ValidationError("no feasible assignment")
            if row4col[j] != -1:
                # prefer a free column among equal minima; shortens the search
                ties = np.flatnonzero((masked == min_val) & (row4col == -1))
                if ties.size:
                    j = int(ties[0])
            scanned_col[j] = True
            if row4col[j] == -1:
                sink = j
            else:
                i = int(row4col[j])

        u[cur] += min_val
        others = scanned_row.copy()
        others[cur] = False
        idx = np.flatnonzero(others)
        u[idx] += min_val - shortest[col4row[idx]]
        v[scanned_col] -= min_val - shortest[scanned_col]

        j = sink
        while True:
            i = int(path[j])
            row4col[j] = i
            col4row[i], j = j, int(col4row[i])
            if i == cur:
                break

    rows = np.arange(nr, dtype=np.int64)
    return rows, col4row.copy()
