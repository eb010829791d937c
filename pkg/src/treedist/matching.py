"""Maximum-weight bipartite matching with exact integer weights.

Weight matrices are lists of rows; an entry of ``FORBIDDEN`` (``None``) marks
a missing edge.  Both solvers use the O(n^3) shortest-augmenting-path form of
the Hungarian method.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

FORBIDDEN = None

Matrix = Sequence[Sequence[Optional[int]]]
Pairs = list[tuple[int, int]]


def _hungarian_min(cost: Matrix) -> Optional[list[int]]:
    """Min-cost assignment of every row to a distinct column.

    Requires ``rows <= cols``.  Returns ``col_of_row`` or None when forbidden
    entries leave no complete assignment.
    """
    n = len(cost)
    if n == 0:
        return []
    m = len(cost[0])
    inf = math.inf
    u = [0] * (n + 1)
    v = [0] * (m + 1)
    p = [0] * (m + 1)  # p[j]: row (1-based) assigned to column j
    way = [0] * (m + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [inf] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            row = cost[i0 - 1]
            delta = inf
            j1 = -1
            for j in range(1, m + 1):
                if used[j]:
                    continue
                c = row[j - 1]
                if c is not None:
                    cur = c - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            if j1 == -1:
                return None
            for j in range(m + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                elif minv[j] != inf:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    col_of_row = [0] * n
    for j in range(1, m + 1):
        if p[j]:
            col_of_row[p[j] - 1] = j - 1
    return col_of_row


def _free_solve(w: Matrix) -> tuple[int, Pairs]:
    p = len(w)
    q = len(w[0]) if p else 0
    if p == 0 or q == 0:
        return 0, []
    k = max(p, q)
    # forbidden and dummy cells both cost 0: choosing them means "unmatched"
    cost = [[-(w[i][j] or 0) if i < p and j < q else 0 for j in range(k)] for i in range(k)]
    assign = _hungarian_min(cost)
    pairs = [(i, j) for i, j in enumerate(assign)
             if i < p and j < q and w[i][j] is not None and w[i][j] > 0]
    return sum(w[i][j] for i, j in pairs), pairs


def _bij_solve(w: Matrix) -> Optional[tuple[int, Pairs]]:
    p = len(w)
    q = len(w[0]) if p else 0
    if p != q:
        return None
    if p == 0:
        return 0, []
    cost = [[None if c is None else -c for c in row] for row in w]
    assign = _hungarian_min(cost)
    if assign is None:
        return None
    pairs = list(enumerate(assign))
    return sum(w[i][j] for i, j in pairs), pairs


def _check(w: Matrix) -> None:
    if w and any(len(row) != len(w[0]) for row in w):
        raise ValueError("weight matrix rows differ in length")
    for row in w:
        for c in row:
            if c is not None and (not isinstance(c, int) or c < 0):
                raise ValueError(f"weights must be nonnegative integers, got {c!r}")


def _sub(w: Matrix, rows: Sequence[int], cols: Sequence[int]) -> list[list[Optional[int]]]:
    return [[w[i][j] for j in cols] for i in rows]


def max_weight_matching(w: Matrix, tie_break: bool = True) -> tuple[int, Pairs]:
    """Best matching, not necessarily perfect, that avoids forbidden edges.

    With ``tie_break`` the lexicographically smallest sorted pair list among
    all optimal matchings is returned; otherwise the pairs are whatever the
    solver produced, restricted to positive-weight edges.
    """
    _check(w)
    value, pairs = _free_solve(w)
    if not tie_break or not pairs:
        return value, pairs
    p, q = len(w), len(w[0])
    out: Pairs = []
    used: set[int] = set()
    acc = 0
    last = -1
    while acc != value:
        picked = None
        for i in range(last + 1, p):
            for j in range(q):
                if j in used or w[i][j] is None:
                    continue
                rest_cols = [c for c in range(q) if c not in used and c != j]
                rest, _ = _free_solve(_sub(w, range(i + 1, p), rest_cols))
                if acc + w[i][j] + rest == value:
                    picked = (i, j)
                    break
            if picked:
                break
        assert picked is not None, "lexicographic reconstruction lost the optimum"
        out.append(picked)
        used.add(picked[1])
        acc += w[picked[0]][picked[1]]
        last = picked[0]
    return value, out


def max_weight_bijection(w: Matrix, tie_break: bool = True) -> Optional[tuple[int, Pairs]]:
    """Best perfect matching avoiding forbidden edges, or None if none exists.

    With ``tie_break`` the column chosen for each row, in row order, is the
    smallest one that still admits an optimal completion.
    """
    _check(w)
    got = _bij_solve(w)
    if got is None or not tie_break:
        return got
    value = got[0]
    p = len(w)
    out: Pairs = []
    free_cols = list(range(p))
    acc = 0
    for i in range(p):
        for j in free_cols:
            if w[i][j] is None:
                continue
            rest_cols = [c for c in free_cols if c != j]
            rest = _bij_solve(_sub(w, range(i + 1, p), rest_cols))
            if rest is not None and acc + w[i][j] + rest[0] == value:
                out.append((i, j))
                acc += w[i][j]
                free_cols = rest_cols
                break
        else:
            raise AssertionError("lexicographic reconstruction lost the optimum")
    return value, out
