"""Maximum-weight assignment for rectangular integer matrices.

The solver is a shortest-augmenting-path method of the Jonker-Volgenant family
(the row-by-row Dijkstra variant with dual potentials), O(rows * cols^2) in the
worst case, i.e. O(n^3) for square inputs.  It minimizes ``w_max - w`` in exact
int64 arithmetic.

Columns may be given in grouped form: ``weights[i, g]`` plus ``column_groups[j] = g``
describes a matrix whose column ``j`` equals ``weights[:, column_groups[j]]``.  The
school-seat matrices use this so a 10 000 x 10 000 seat matrix costs 10 000 x 50
memory.

Seed handling: rows and columns are shuffled with ``seeded_permutation`` before
solving and un-shuffled after.  The shuffle never changes the optimum value,
only which of several optimal assignments the deterministic kernel reaches.

``seeded_permutation`` is a Fisher-Yates shuffle driven by numpy's PCG64
bit generator seeded through ``numpy.random.SeedSequence(seed)``.  Step ``i``
(from ``n - 1`` down to 1) draws one raw 64-bit word ``x`` and swaps position
``i`` with ``j = (x * (i + 1)) >> 64``.  The solver shuffles rows with entropy
``[seed, 1]`` and columns with ``[seed, 2]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import ShapeError, WeightOverflowError

__all__ = ["Assignment", "max_weight_assignment", "seeded_permutation"]

_ACCUMULATOR_LIMIT = 2**63
# |potentials| stay below this so reduced-cost sums cannot wrap int64
_DUAL_LIMIT = 2**61


@dataclass(frozen=True)
class Assignment:
    """``row_to_col[i]`` is the column given to row ``i``; spare columns are unassigned."""

    row_to_col: tuple[int, ...]
    total_weight: int

    def unassigned_columns(self, n_cols: int) -> list[int]:
        used = set(self.row_to_col)
        return [j for j in range(n_cols) if j not in used]


def seeded_permutation(n: int, seed) -> np.ndarray:
    """Deterministic Fisher-Yates permutation of ``range(n)``.

    ``seed`` is a nonnegative int or a sequence of them (SeedSequence entropy).
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    perm = np.arange(n, dtype=np.int64)
    if n < 2:
        return perm
    entropy = int(seed) if np.isscalar(seed) else [int(x) for x in seed]
    raw = np.random.PCG64(np.random.SeedSequence(entropy)).random_raw(n - 1)
    for step, i in enumerate(range(n - 1, 0, -1)):
        j = (int(raw[step]) * (i + 1)) >> 64
        perm[i], perm[j] = perm[j], perm[i]
    return perm


@numba.njit(cache=True, nogil=True)
def _solve(cost, groups):
    """Minimum-cost assignment of every row; returns (col4row, status).

    status: 0 ok, 1 infeasible, 2 dual overflow.
    """
    nr = cost.shape[0]
    nc = groups.shape[0]
    inf = np.iinfo(np.int64).max
    limit = np.int64(_DUAL_LIMIT)
    u = np.zeros(nr, dtype=np.int64)
    v = np.zeros(nc, dtype=np.int64)
    spc = np.empty(nc, dtype=np.int64)
    path = np.full(nc, -1, dtype=np.int64)
    col4row = np.full(nr, -1, dtype=np.int64)
    row4col = np.full(nc, -1, dtype=np.int64)
    remaining = np.empty(nc, dtype=np.int64)
    sr = np.zeros(nr, dtype=np.bool_)
    sc = np.zeros(nc, dtype=np.bool_)
    touched_rows = np.empty(nr, dtype=np.int64)
    touched_cols = np.empty(nc, dtype=np.int64)

    for cur in range(nr):
        min_val = np.int64(0)
        n_rem = nc
        for it in range(nc):
            remaining[it] = nc - it - 1
            spc[it] = inf
        n_tr = 0
        n_tc = 0
        i = cur
        sink = -1
        while sink == -1:
            sr[i] = True
            touched_rows[n_tr] = i
            n_tr += 1
            index = -1
            lowest = inf
            base = min_val - u[i]
            row = cost[i]
            for it in range(n_rem):
                j = remaining[it]
                r = base + row[groups[j]] - v[j]
                if r < spc[j]:
                    path[j] = i
                    spc[j] = r
                s = spc[j]
                if s < lowest or (s == lowest and row4col[j] == -1):
                    lowest = s
                    index = it
            min_val = lowest
            if min_val == inf:
                return col4row, 1
            j = remaining[index]
            if row4col[j] == -1:
                sink = j
            else:
                i = row4col[j]
            sc[j] = True
            touched_cols[n_tc] = j
            n_tc += 1
            n_rem -= 1
            remaining[index] = remaining[n_rem]

        u[cur] += min_val
        if u[cur] > limit or u[cur] < -limit:
            return col4row, 2
        for t in range(n_tr):
            i = touched_rows[t]
            sr[i] = False
            if i != cur:
                u[i] += min_val - spc[col4row[i]]
                if u[i] > limit or u[i] < -limit:
                    return col4row, 2
        for t in range(n_tc):
            j = touched_cols[t]
            sc[j] = False
            v[j] -= min_val - spc[j]
            if v[j] > limit or v[j] < -limit:
                return col4row, 2

        j = sink
        while True:
            i = path[j]
            row4col[j] = i
            nxt = col4row[i]
            col4row[i] = j
            j = nxt
            if i == cur:
                break
    return col4row, 0


def _as_weights(matrix) -> np.ndarray:
    arr = np.asarray(matrix)
    if arr.dtype == object or arr.dtype.kind == "u":
        if arr.size and (max(int(x) for x in arr.ravel()) > 2**63 - 1):
            raise WeightOverflowError("weight exceeds the 64-bit domain")
        if arr.size and min(int(x) for x in arr.ravel()) < 0:
            raise ValueError("weights must be nonnegative integers")
        arr = arr.astype(np.int64)
    elif arr.dtype.kind == "b":
        arr = arr.astype(np.int64)
    elif arr.dtype.kind != "i":
        if arr.size and not np.all(np.mod(arr, 1) == 0):
            raise TypeError("weights must be integers")
        arr = arr.astype(np.int64)
    else:
        arr = arr.astype(np.int64, copy=False)
    if arr.ndim != 2:
        raise ShapeError(f"weight matrix must be 2-D, got shape {arr.shape}")
    if arr.size and arr.min() < 0:
        raise ValueError("weights must be nonnegative integers")
    return arr


def max_weight_assignment(matrix, seed: int = 0, *, column_groups=None) -> Assignment:
    """Assign every row to a distinct column maximizing total weight.

    Args:
        matrix: ``rows x cols`` nonnegative integers, or ``rows x groups`` when
            ``column_groups`` is given.
        seed: selects among equally optimal assignments; same seed, same output.
        column_groups: optional length-``cols`` array mapping each column to a
            column of ``matrix``.

    Raises:
        ShapeError: more rows than columns.
        WeightOverflowError: ``rows * max weight`` reaches 2**63, or potentials
            leave the safe int64 range.
    """
    w = _as_weights(matrix)
    nr = w.shape[0]
    if column_groups is None:
        groups = np.arange(w.shape[1], dtype=np.int64)
    else:
        groups = np.asarray(column_groups, dtype=np.int64)
        if groups.ndim != 1 or (groups.size and (groups.min() < 0 or groups.max() >= w.shape[1])):
            raise ShapeError("column_groups must index columns of the weight matrix")
    nc = groups.shape[0]
    if nr > nc:
        raise ShapeError(f"{nr} rows cannot be assigned to {nc} columns")
    if nr == 0:
        return Assignment((), 0)
    w_max = int(w.max()) if w.size else 0
    if nr * w_max >= _ACCUMULATOR_LIMIT:
        raise WeightOverflowError(f"{nr} rows x max weight {w_max} overflows the accumulator")

    row_perm = seeded_permutation(nr, [seed, 1])
    col_perm = seeded_permutation(nc, [seed, 2])
    cost = np.ascontiguousarray(w_max - w[row_perm])
    col4row, status = _solve(cost, np.ascontiguousarray(groups[col_perm]))
    if status == 2:
        raise WeightOverflowError("dual potentials left the int64-safe range")
    if status != 0:  # pragma: no cover - every row can reach a free column
        raise RuntimeError("assignment kernel reported infeasibility")

    row_to_col = np.empty(nr, dtype=np.int64)
    row_to_col[row_perm] = col_perm[col4row]
    total = 0
    for i, j in enumerate(row_to_col.tolist()):
        total += int(w[i, groups[j]])
    return Assignment(tuple(row_to_col.tolist()), total)
