"""0-1 integer programs over node-pair variables, and their LP-format export.

Every model maximizes ``sum(objective[v] * m_v) + constant``; ``constant`` is
kept out of the variable objective so that values compose additively.
Variables are ordered by ``x`` in pre-order, then ``y`` in pre-order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Optional, Sequence

from .cost import CostFunction, total_indel, weight_matrix
from .tree import Tree, is_ancestor

if TYPE_CHECKING:
    from .dp import WeightTable

LE = "<="
EQ = "="


@dataclass(frozen=True)
class Constraint:
    terms: tuple[tuple[int, int], ...]  # (variable index, coefficient)
    sense: str
    rhs: int

    def is_packing(self) -> bool:
        return self.sense == LE and self.rhs == 1 and all(c == 1 for _, c in self.terms)


@dataclass(frozen=True)
class Forest:
    """Variables grouped by node of a rooted forest (``parent[g] < g``, -1 for roots)."""

    parent: tuple[int, ...]
    group_of_var: tuple[int, ...]


@dataclass(frozen=True)
class IlpModel:
    tags: tuple[tuple[int, int], ...]
    objective: tuple[int, ...]
    constraints: tuple[Constraint, ...]
    constant: int = 0
    name: str = "model"
    # Optional relaxation hint: every feasible solution picks at most one
    # variable per group and an antichain of groups, in both forests.
    antichain_forests: Optional[tuple[Forest, Forest]] = None

    def __post_init__(self) -> None:
        if len(self.tags) != len(self.objective):
            raise ValueError("every variable needs exactly one objective coefficient")
        if len(set(self.tags)) != len(self.tags):
            raise ValueError("variable tags must be distinct")
        n = len(self.tags)
        for con in self.constraints:
            if con.sense not in (LE, EQ):
                raise ValueError(f"unsupported constraint sense {con.sense!r}")
            for v, _ in con.terms:
                if not 0 <= v < n:
                    raise ValueError(f"constraint references unknown variable {v}")

    @property
    def num_vars(self) -> int:
        return len(self.tags)

    def index(self) -> dict[tuple[int, int], int]:
        return {tag: i for i, tag in enumerate(self.tags)}

    def value_of(self, assignment: Sequence[int]) -> int:
        return sum(c for c, a in zip(self.objective, assignment) if a)

    def is_feasible(self, assignment: Sequence[int]) -> bool:
        for con in self.constraints:
            lhs = sum(c * assignment[v] for v, c in con.terms)
            if con.sense == LE and lhs > con.rhs or con.sense == EQ and lhs != con.rhs:
                return False
        return True

    def decode(self, assignment: Sequence[int]) -> frozenset[tuple[int, int]]:
        return frozenset(tag for tag, a in zip(self.tags, assignment) if a)


def _row(terms: Iterable[tuple[int, int]], rhs: int, sense: str = LE) -> Constraint:
    return Constraint(tuple(terms), sense, rhs)


def _pair_vars(t1: Tree, t2: Tree) -> list[tuple[int, int]]:
    return [(x, y) for x in t1.preorder() for y in t2.preorder()]


# --------------------------------------------------------------------------
# naive formulations: one variable per node pair, mapping class as rows


def build_naive_tai(t1: Tree, t2: Tree, cost: CostFunction, clamp_negative: bool = False) -> IlpModel:
    """Row/column packing plus one row per order-violating pair of pairs.

    Pairs sharing a node are already excluded by the row and column
    constraints, so pairwise rows are only emitted for pairs of pairs that
    differ in both coordinates.
    """
    return _naive_tai(t1, t2, cost, clamp_negative, "naive-tai")


def _naive_tai(t1, t2, cost, clamp, name) -> IlpModel:
    w = weight_matrix(cost, t1, t2, clamp=clamp)
    tags = _pair_vars(t1, t2)
    idx = {tag: i for i, tag in enumerate(tags)}
    rows: list[Constraint] = []
    for x in t1.preorder():
        rows.append(_row(((idx[x, y], 1) for y in t2.preorder()), 1))
    for y in t2.preorder():
        rows.append(_row(((idx[x, y], 1) for x in t1.preorder()), 1))
    for (i, (x, y)), (j, (x2, y2)) in itertools.combinations(enumerate(tags), 2):
        if x == x2 or y == y2:
            continue
        if (is_ancestor(t1, x, x2) != is_ancestor(t2, y, y2)
                or is_ancestor(t1, x2, x) != is_ancestor(t2, y2, y)):
            rows.append(_row(((i, 1), (j, 1)), 1))
    return IlpModel(
        tags=tuple(tags),
        objective=tuple(w[x][y] for x, y in tags),
        constraints=tuple(rows),
        constant=total_indel(cost, t1, t2),
        name=name,
    )


def _segment_rows(t1: Tree, t2: Tree, idx: dict) -> list[Constraint]:
    rows = []
    for x in t1.nodes:
        below1 = t1.subtree(x)[1:]
        for y in t2.nodes:
            below2 = t2.subtree(y)[1:]
            for x2 in below1:
                for y2 in below2:
                    par = (t1.parent[x2], t2.parent[y2])
                    if par == (x, y):
                        continue  # m + m' <= m + 1 holds trivially
                    rows.append(_row(((idx[x, y], 1), (idx[x2, y2], 1), (idx[par], -1)), 1))
    return rows


def build_naive_segmental(t1: Tree, t2: Tree, cost: CostFunction, clamp_negative: bool = False) -> IlpModel:
    base = _naive_tai(t1, t2, cost, clamp_negative, "naive-seg")
    rows = _segment_rows(t1, t2, base.index())
    return _extend(base, rows)


def build_naive_botseg(t1: Tree, t2: Tree, cost: CostFunction, clamp_negative: bool = False) -> IlpModel:
    """Segmental rows plus ``m[x,y] <= sum of leaf-pair variables below``.

    The leaf row is emitted for every pair that is not leaf-leaf.  With
    exactly one leaf the row forces ``m[x,y] = 0``, which is required: such a
    pair can never sit above a mapped leaf pair.
    """
    base = _naive_tai(t1, t2, cost, clamp_negative, "naive-botseg")
    idx = base.index()
    rows = _segment_rows(t1, t2, idx)
    for x in t1.nodes:
        leaves1 = t1.leaves_under(x)
        for y in t2.nodes:
            if t1.is_leaf(x) and t2.is_leaf(y):
                continue
            terms = [(idx[x, y], 1)]
            terms += [(idx[a, b], -1) for a in leaves1 for b in t2.leaves_under(y)]
            rows.append(_row(terms, 0))
    return _extend(base, rows)


def build_naive_bottomup(t1: Tree, t2: Tree, cost: CostFunction, clamp_negative: bool = False) -> IlpModel:
    base = _naive_tai(t1, t2, cost, clamp_negative, "naive-bot")
    idx = base.index()
    rows = []
    for x in t1.preorder():
        for y in t2.preorder():
            for x2 in t1.children[x]:
                rows.append(_row([(idx[x, y], 1)] + [(idx[x2, y2], -1) for y2 in t2.children[y]], 0))
            for y2 in t2.children[y]:
                rows.append(_row([(idx[x, y], 1)] + [(idx[x2, y2], -1) for x2 in t1.children[x]], 0))
    return _extend(base, rows)


def _extend(base: IlpModel, rows: list[Constraint]) -> IlpModel:
    return IlpModel(base.tags, base.objective, base.constraints + tuple(rows), base.constant, base.name)


# --------------------------------------------------------------------------
# decomposition formulations


def _forest(t: Tree, nodes: list[int], top: int | None) -> tuple[dict[int, int], tuple[int, ...]]:
    """Group ids for ``nodes`` (pre-order); parents outside the set become roots."""
    gid = {v: i for i, v in enumerate(nodes)}
    parent = tuple(gid.get(t.parent[v], -1) if t.parent[v] != top else -1 for v in nodes)
    return gid, parent


def _antichain_model(
    t1: Tree, nodes1: list[int], t2: Tree, nodes2: list[int],
    keep, weight, paths1, paths2, constant: int, name: str, top1, top2,
) -> IlpModel:
    tags = [(a, b) for a in nodes1 for b in nodes2 if keep(a, b)]
    by_left: dict[int, list[int]] = {}
    by_right: dict[int, list[int]] = {}
    for i, (a, b) in enumerate(tags):
        by_left.setdefault(a, []).append(i)
        by_right.setdefault(b, []).append(i)
    rows = []
    for path in paths1:
        rows.append(_row(((v, 1) for a in path for v in by_left.get(a, ())), 1))
    for path in paths2:
        rows.append(_row(((v, 1) for b in path for v in by_right.get(b, ())), 1))
    g1, par1 = _forest(t1, nodes1, top1)
    g2, par2 = _forest(t2, nodes2, top2)
    hint = (
        Forest(par1, tuple(g1[a] for a, _ in tags)),
        Forest(par2, tuple(g2[b] for _, b in tags)),
    )
    return IlpModel(
        tags=tuple(tags),
        objective=tuple(weight(a, b) for a, b in tags),
        constraints=tuple(rows),
        constant=constant,
        name=name,
        antichain_forests=hint,
    )


def _paths_below(t: Tree, x: int, include_top: bool) -> list[list[int]]:
    out = []
    for leaf in t.leaves_under(x):
        path = [leaf]
        while path[-1] != x:
            path.append(t.parent[path[-1]])
        if not include_top:
            path.pop()
        out.append(path)
    return out


def build_dp_subproblem(t1: Tree, x: int, t2: Tree, y: int, wt: "WeightTable") -> IlpModel:
    """Best antichain-to-antichain pairing strictly below ``(x, y)``.

    One packing row per leaf of ``T1(x)`` over the path below ``x`` and one per
    leaf of ``T2(y)``; the constant is the pair weight of ``(x, y)``.
    """
    nodes1 = t1.subtree(x)[1:]
    nodes2 = t2.subtree(y)[1:]
    return _antichain_model(
        t1, nodes1, t2, nodes2,
        keep=lambda a, b: True,
        weight=lambda a, b: wt.W[a][b],
        paths1=_paths_below(t1, x, include_top=False),
        paths2=_paths_below(t2, y, include_top=False),
        constant=wt.pair_weights[x][y],
        name=f"subproblem({x},{y})",
        top1=x, top2=y,
    )


def build_combiner(t1: Tree, t2: Tree, wt: "WeightTable") -> IlpModel:
    """Select antichain-rooted segments maximizing the summed table values.

    Only valid table entries become variables.  The constant is the total
    deletion and insertion cost, so ``constant - optimum`` is the distance.
    """
    return _antichain_model(
        t1, t1.preorder(), t2, t2.preorder(),
        keep=lambda a, b: wt.valid[a][b],
        weight=lambda a, b: wt.W[a][b],
        paths1=_paths_below(t1, t1.root, include_top=True),
        paths2=_paths_below(t2, t2.root, include_top=True),
        constant=wt.total_indel,
        name="combiner",
        top1=None, top2=None,
    )


def build_antichain_pairwise(t1: Tree, x: int, t2: Tree, y: int, wt: "WeightTable") -> IlpModel:
    """Same subproblem as :func:`build_dp_subproblem` with pairwise conflict rows.

    Two variables conflict when they share a node or are comparable on either
    side.  This is the quadratic-size formulation; it exists to cross-check
    the path-constraint model.
    """
    nodes1 = t1.subtree(x)[1:]
    nodes2 = t2.subtree(y)[1:]
    tags = [(a, b) for a in nodes1 for b in nodes2]
    rows = []
    for (i, (a, b)), (j, (a2, b2)) in itertools.combinations(enumerate(tags), 2):
        if (a == a2 or b == b2 or is_ancestor(t1, a, a2) or is_ancestor(t1, a2, a)
                or is_ancestor(t2, b, b2) or is_ancestor(t2, b2, b)):
            rows.append(_row(((i, 1), (j, 1)), 1))
    return IlpModel(
        tags=tuple(tags),
        objective=tuple(wt.W[a][b] for a, b in tags),
        constraints=tuple(rows),
        constant=wt.pair_weights[x][y],
        name=f"pairwise({x},{y})",
    )


# --------------------------------------------------------------------------
# LP export


def _var_name(tag: tuple[int, int]) -> str:
    return f"m_{tag[0]}_{tag[1]}"


def _linear(terms: Iterable[tuple[str, int]]) -> str:
    parts = []
    for name, c in terms:
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        body = name if mag == 1 else f"{mag} {name}"
        if not parts:
            parts.append(body if sign == "+" else f"- {body}")
        else:
            parts.append(f"{sign} {body}")
    return " ".join(parts)


def export_lp(model: IlpModel) -> str:
    """CPLEX LP text.  The model constant is recorded in a comment only."""
    names = [_var_name(t) for t in model.tags]
    lines = [f"\\ {model.name}", f"\\ constant term: {model.constant}", "Maximize"]
    if names:
        obj = " + ".join(f"{c} {n}" for c, n in zip(model.objective, names))
        lines.append(f" obj: {obj}")
    else:
        lines.append(" obj: 0")
    lines.append("Subject To")
    k = 0
    for con in model.constraints:
        if not con.terms:
            continue
        expr = _linear((names[v], c) for v, c in con.terms)
        lines.append(f" c{k}: {expr} {con.sense} {con.rhs}")
        k += 1
    if names:
        lines.append("Binary")
        for i in range(0, len(names), 8):
            lines.append(" " + " ".join(names[i:i + 8]))
    lines.append("End")
    return "\n".join(lines) + "\n"
