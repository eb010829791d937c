"""Distance computation: per-pair tables, the combining program, and drivers.

For every pair ``(x, y)`` the table holds ``W[x][y]``, the largest total pair
weight of a class-valid mapping between ``T1(x)`` and ``T2(y)`` that contains
``(x, y)``.  Pairs are visited in post-order on both trees, so every strict
descendant pair is finished before its ancestors need it.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

from . import ilp
from .cost import CostFunction, distance_from_weight, total_indel, weight_matrix
from .mapping import DistanceClass, brute_force_distance
from .matching import FORBIDDEN, max_weight_bijection, max_weight_matching
from .solver import SolverConfig, Status, solve
from .tree import Tree, shape_classes

Pair = tuple[int, int]


@dataclass
class WeightTable:
    cls: DistanceClass
    W: list[list[int]]
    valid: list[list[bool]]
    witness: list[list[tuple[Pair, ...]]]
    pair_weights: list[list[int]]
    total_indel: int
    exact: bool = True
    subproblems: int = 0
    solver_nodes: int = 0


class InternalError(RuntimeError):
    pass


def _empty_table(cls: DistanceClass, t1: Tree, t2: Tree, cost: CostFunction, clamp: bool) -> WeightTable:
    n, m = len(t1), len(t2)
    return WeightTable(
        cls=cls,
        W=[[0] * m for _ in range(n)],
        valid=[[True] * m for _ in range(n)],
        witness=[[()] * m for _ in range(n)],
        pair_weights=weight_matrix(cost, t1, t2, clamp=clamp),
        total_indel=total_indel(cost, t1, t2),
    )


class _Budget:
    def __init__(self, cfg: SolverConfig):
        self.cfg = cfg
        self.deadline = None if cfg.time_limit is None else time.perf_counter() + cfg.time_limit

    def next_cfg(self) -> SolverConfig:
        if self.deadline is None:
            return self.cfg
        left = max(0.0, self.deadline - time.perf_counter())
        return SolverConfig(time_limit=left, node_limit=self.cfg.node_limit, branching=self.cfg.branching)


def weights_edit(
    t1: Tree, t2: Tree, cost: CostFunction,
    solver_cfg: SolverConfig | None = None, clamp_negative: bool = False,
    _budget: Optional[_Budget] = None,
) -> WeightTable:
    """Fill the table by solving one packing program per internal pair.

    ``solver_cfg.time_limit`` is the budget for the whole table.  When it runs
    out, later subproblems keep their incumbents and ``exact`` turns False.
    """
    budget = _budget or _Budget(solver_cfg or SolverConfig())
    wt = _empty_table(DistanceClass.EDIT, t1, t2, cost, clamp_negative)
    for x in t1.postorder():
        for y in t2.postorder():
            w = wt.pair_weights[x][y]
            if t1.is_leaf(x) or t2.is_leaf(y):
                wt.W[x][y] = w
                continue
            model = ilp.build_dp_subproblem(t1, x, t2, y, wt)
            sol = solve(model, budget.next_cfg())
            wt.subproblems += 1
            wt.solver_nodes += sol.nodes_explored
            if not sol.exact:
                wt.exact = False
            if sol.assignment is None:
                wt.W[x][y] = w
                continue
            wt.W[x][y] = model.constant + sol.best_value
            wt.witness[x][y] = tuple(sorted(model.decode(sol.assignment)))
    return wt


def _child_matrix(t1: Tree, x: int, t2: Tree, y: int, wt: WeightTable, forbid_invalid: bool):
    return [
        [FORBIDDEN if forbid_invalid and not wt.valid[a][b] else wt.W[a][b] for b in t2.children[y]]
        for a in t1.children[x]
    ]


def weights_segmental(t1: Tree, t2: Tree, cost: CostFunction, clamp_negative: bool = False) -> WeightTable:
    wt = _empty_table(DistanceClass.SEG, t1, t2, cost, clamp_negative)
    for x in t1.postorder():
        for y in t2.postorder():
            w = wt.pair_weights[x][y]
            if t1.is_leaf(x) or t2.is_leaf(y):
                wt.W[x][y] = w
                continue
            value, pairs = max_weight_matching(_child_matrix(t1, x, t2, y, wt, False), tie_break=False)
            wt.subproblems += 1
            wt.W[x][y] = w + value
            wt.witness[x][y] = tuple((t1.children[x][i], t2.children[y][j]) for i, j in pairs)
    return wt


def weights_botseg(t1: Tree, t2: Tree, cost: CostFunction, clamp_negative: bool = False) -> WeightTable:
    """Segmental table restricted to segments that reach a leaf pair.

    An internal pair is kept only if some valid child pair exists; the
    matching runs over valid child pairs only.  When every valid child pair
    has zero weight the matching is empty and one of them is taken anyway.
    """
    wt = _empty_table(DistanceClass.BOTSEG, t1, t2, cost, clamp_negative)
    for x in t1.postorder():
        for y in t2.postorder():
            leaf1, leaf2 = t1.is_leaf(x), t2.is_leaf(y)
            if leaf1 and leaf2:
                wt.W[x][y] = wt.pair_weights[x][y]
                continue
            if leaf1 or leaf2:
                wt.W[x][y] = 0
                wt.valid[x][y] = False
                continue
            mat = _child_matrix(t1, x, t2, y, wt, True)
            wt.subproblems += 1
            edges = [(i, j) for i, row in enumerate(mat) for j, c in enumerate(row) if c is not FORBIDDEN]
            if not edges:
                wt.W[x][y] = 0
                wt.valid[x][y] = False
                continue
            value, pairs = max_weight_matching(mat, tie_break=False)
            if not pairs:
                pairs = [edges[0]]
            wt.W[x][y] = wt.pair_weights[x][y] + value
            wt.witness[x][y] = tuple((t1.children[x][i], t2.children[y][j]) for i, j in pairs)
    return wt


def weights_bottomup(t1: Tree, t2: Tree, cost: CostFunction, clamp_negative: bool = False) -> WeightTable:
    wt = _empty_table(DistanceClass.BOT, t1, t2, cost, clamp_negative)
    shape1, shape2 = shape_classes(t1, t2)
    for x in t1.postorder():
        for y in t2.postorder():
            if shape1[x] != shape2[y]:
                wt.W[x][y] = 0
                wt.valid[x][y] = False
                continue
            w = wt.pair_weights[x][y]
            if t1.is_leaf(x):
                wt.W[x][y] = w
                continue
            got = max_weight_bijection(_child_matrix(t1, x, t2, y, wt, True), tie_break=False)
            wt.subproblems += 1
            if got is None:
                raise InternalError(f"isomorphic pair ({x}, {y}) admits no child bijection")
            value, pairs = got
            wt.W[x][y] = w + value
            wt.witness[x][y] = tuple((t1.children[x][i], t2.children[y][j]) for i, j in pairs)
    return wt


def weight_table(
    cls: DistanceClass | str, t1: Tree, t2: Tree, cost: CostFunction,
    solver_cfg: SolverConfig | None = None, clamp_negative: bool = False,
) -> WeightTable:
    cls = DistanceClass(cls)
    if cls is DistanceClass.EDIT:
        return weights_edit(t1, t2, cost, solver_cfg, clamp_negative)
    builder = {
        DistanceClass.SEG: weights_segmental,
        DistanceClass.BOTSEG: weights_botseg,
        DistanceClass.BOT: weights_bottomup,
    }[cls]
    return builder(t1, t2, cost, clamp_negative)


def expand(wt: WeightTable, roots) -> frozenset[Pair]:
    """Union of the segments hanging from ``roots`` via the stored witnesses."""
    out: set[Pair] = set()
    stack = list(roots)
    while stack:
        x, y = stack.pop()
        out.add((x, y))
        stack.extend(wt.witness[x][y])
    return frozenset(out)


# --------------------------------------------------------------------------
# drivers


@dataclass
class RunStats:
    status: Status
    solver_nodes: int = 0
    subproblems: int = 0
    wall_ms: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        return self.status is Status.OPTIMAL


@dataclass
class DistanceResult:
    distance: int
    mapping: frozenset[Pair]
    stats: RunStats

    def __iter__(self):
        return iter((self.distance, self.mapping, self.stats))


NAIVE_BUILDERS = {
    DistanceClass.EDIT: ilp.build_naive_tai,
    DistanceClass.SEG: ilp.build_naive_segmental,
    DistanceClass.BOTSEG: ilp.build_naive_botseg,
    DistanceClass.BOT: ilp.build_naive_bottomup,
}


def distance(
    t1: Tree,
    t2: Tree,
    cost: CostFunction,
    cls: DistanceClass | str = DistanceClass.EDIT,
    method: str = "dp",
    solver_cfg: SolverConfig | None = None,
    node_cap: int = 14,
    clamp_negative: bool = False,
) -> DistanceResult:
    """Distance of the given class computed with ``method`` in {dp, naive, oracle}.

    On a solver timeout the result is the cost of the best mapping found, an
    upper bound on the true distance, and ``stats.status`` is TIMEOUT.
    """
    cls = DistanceClass(cls)
    cfg = solver_cfg or SolverConfig()
    start = time.perf_counter()

    if method == "oracle":
        d, m = brute_force_distance(t1, t2, cost, cls, node_cap=node_cap)
        stats = RunStats(Status.OPTIMAL)
    elif method == "naive":
        model = NAIVE_BUILDERS[cls](t1, t2, cost, clamp_negative=clamp_negative)
        sol = solve(model, cfg)
        m = model.decode(sol.assignment) if sol.assignment is not None else frozenset()
        d = distance_from_weight(cost, t1, t2, sol.best_value or 0)
        stats = RunStats(sol.status, solver_nodes=sol.nodes_explored, subproblems=1)
    elif method == "dp":
        budget = _Budget(cfg)
        if cls is DistanceClass.EDIT:
            wt = weights_edit(t1, t2, cost, cfg, clamp_negative, _budget=budget)
        else:
            wt = weight_table(cls, t1, t2, cost, cfg, clamp_negative)
        model = ilp.build_combiner(t1, t2, wt)
        sol = solve(model, budget.next_cfg())
        opt = sol.best_value or 0
        chosen = model.decode(sol.assignment) if sol.assignment is not None else ()
        # zero-weight segments do not change the cost; leave them out
        m = expand(wt, [p for p in sorted(chosen) if wt.W[p[0]][p[1]] > 0])
        d = distance_from_weight(cost, t1, t2, opt)
        status = Status.OPTIMAL if (wt.exact and sol.exact) else Status.TIMEOUT
        stats = RunStats(
            status,
            solver_nodes=wt.solver_nodes + sol.nodes_explored,
            subproblems=wt.subproblems,
            extra={"combiner_vars": model.num_vars},
        )
    else:
        raise ValueError(f"unknown method {method!r}")
    stats.wall_ms = (time.perf_counter() - start) * 1000.0
    return DistanceResult(d, frozenset(m), stats)
