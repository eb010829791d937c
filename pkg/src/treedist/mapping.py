"""Mapping classes and an exhaustive optimal-mapping oracle.

A mapping is any collection of ``(x, y)`` node pairs; the predicates accept
lists, sets or frozensets.  Results returned by this package are frozensets.
"""

from __future__ import annotations

from enum import Enum
from typing import Callable, Iterable

from .cost import CostFunction, pair_weight, total_indel
from .tree import Tree, is_ancestor

Pairs = Iterable[tuple[int, int]]


class DistanceClass(str, Enum):
    EDIT = "edit"
    SEG = "seg"
    BOTSEG = "botseg"
    BOT = "bot"


def is_tai(t1: Tree, t2: Tree, m: Pairs) -> bool:
    pairs = list(m)
    for i, (x, y) in enumerate(pairs):
        for x2, y2 in pairs[i + 1:]:
            if (x == x2) != (y == y2):
                return False
            if is_ancestor(t1, x, x2) != is_ancestor(t2, y, y2):
                return False
            if is_ancestor(t1, x2, x) != is_ancestor(t2, y2, y):
                return False
    return True


def is_segmental(t1: Tree, t2: Tree, m: Pairs) -> bool:
    pairs = set(m)
    if not is_tai(t1, t2, pairs):
        return False
    for x, y in pairs:
        for x2, y2 in pairs:
            if is_ancestor(t1, x, x2) and is_ancestor(t2, y, y2):
                if (t1.parent[x2], t2.parent[y2]) not in pairs:
                    return False
    return True


def is_bottomup_segmental(t1: Tree, t2: Tree, m: Pairs) -> bool:
    pairs = set(m)
    if not is_segmental(t1, t2, pairs):
        return False
    leaf_pairs = [(a, b) for a, b in pairs if t1.is_leaf(a) and t2.is_leaf(b)]
    for x, y in pairs:
        if not any(
            (x == a or is_ancestor(t1, x, a)) and (y == b or is_ancestor(t2, y, b))
            for a, b in leaf_pairs
        ):
            return False
    return True


def is_bottomup(t1: Tree, t2: Tree, m: Pairs) -> bool:
    pairs = set(m)
    if not is_tai(t1, t2, pairs):
        return False
    for x, y in pairs:
        cx, cy = set(t1.children[x]), set(t2.children[y])
        if len(cx) != len(cy):
            return False
        restricted = [(a, b) for a, b in pairs if a in cx and b in cy]
        # one-to-one already holds, so covering both sides makes it a bijection
        if {a for a, _ in restricted} != cx or {b for _, b in restricted} != cy:
            return False
    return True


PREDICATES: dict[DistanceClass, Callable[[Tree, Tree, Pairs], bool]] = {
    DistanceClass.EDIT: is_tai,
    DistanceClass.SEG: is_segmental,
    DistanceClass.BOTSEG: is_bottomup_segmental,
    DistanceClass.BOT: is_bottomup,
}


def is_valid(cls: DistanceClass | str, t1: Tree, t2: Tree, m: Pairs) -> bool:
    return PREDICATES[DistanceClass(cls)](t1, t2, m)


class OracleCapExceeded(ValueError):
    pass


def iter_tai_mappings(t1: Tree, t2: Tree) -> Iterable[tuple[tuple[int, int], ...]]:
    """Every Tai mapping, as pair tuples sorted by ``x`` in pre-order."""
    order1 = t1.preorder()
    n2 = len(t2)
    used = [False] * n2
    chosen: list[tuple[int, int]] = []

    def consistent(x: int, y: int) -> bool:
        for a, b in chosen:
            # a precedes x in pre-order, so x cannot be an ancestor of a
            if is_ancestor(t1, a, x) != is_ancestor(t2, b, y):
                return False
            if is_ancestor(t2, y, b):
                return False
        return True

    def rec(i: int):
        if i == len(order1):
            yield tuple(chosen)
            return
        yield from rec(i + 1)
        x = order1[i]
        for y in range(n2):
            if not used[y] and consistent(x, y):
                used[y] = True
                chosen.append((x, y))
                yield from rec(i + 1)
                chosen.pop()
                used[y] = False

    yield from rec(0)


def brute_force_distance(
    t1: Tree,
    t2: Tree,
    cost: CostFunction,
    cls: DistanceClass | str = DistanceClass.EDIT,
    node_cap: int = 14,
) -> tuple[int, frozenset[tuple[int, int]]]:
    """Minimum mapping cost over the class, by enumerating all Tai mappings.

    Ties go to the lexicographically smallest sorted pair list.
    """
    if len(t1) + len(t2) > node_cap:
        raise OracleCapExceeded(
            f"oracle limited to {node_cap} total nodes, got {len(t1) + len(t2)}"
        )
    pred = PREDICATES[DistanceClass(cls)]
    w = [[pair_weight(cost, a, b) for b in t2.labels] for a in t1.labels]
    best_weight = None
    best_pairs: list[tuple[int, int]] = []
    for pairs in iter_tai_mappings(t1, t2):
        weight = sum(w[x][y] for x, y in pairs)
        if best_weight is not None and weight < best_weight:
            continue
        key = sorted(pairs)
        if best_weight is not None and weight == best_weight and key >= best_pairs:
            continue
        if pred(t1, t2, pairs):
            best_weight, best_pairs = weight, key
    # the empty mapping belongs to every class, so best_weight is set
    return total_indel(cost, t1, t2) - best_weight, frozenset(best_pairs)
