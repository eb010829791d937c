"""Exact depth-first branch and bound for 0-1 maximization models.

Search order: branch on the free variable with the largest objective
coefficient (lowest index on ties), trying 1 before 0.  Rows are handled by
bound propagation on binaries; packing rows (all coefficients 1, rhs 1) get
the cheap "one set to 1 fixes the rest to 0" rule.  Node bounds come from a
clique cover of the packing rows, or, when the model carries antichain
forests, from a forest DP on one side with the other side's path rows moved
into the objective by subgradient-tuned multipliers.  The relaxed solutions
are repaired into feasible ones to supply incumbents.  No LP solver is used.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .ilp import EQ, IlpModel

ROUNDS_ROOT = 1000
ROUNDS_NODE = 12


class Status(str, Enum):
    OPTIMAL = "optimal"
    TIMEOUT = "timeout"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class SolverConfig:
    time_limit: Optional[float] = None
    node_limit: Optional[int] = None
    branching: str = "max-coef"

    def __post_init__(self) -> None:
        if self.time_limit is not None and self.time_limit < 0:
            raise ValueError("time_limit must be nonnegative")
        if self.node_limit is not None and self.node_limit <= 0:
            raise ValueError("node_limit must be positive")
        if self.branching != "max-coef":
            raise ValueError(f"unknown branching rule {self.branching!r}")


@dataclass(frozen=True)
class IlpSolution:
    status: Status
    best_value: Optional[int]  # a lower bound only when status is TIMEOUT
    assignment: Optional[tuple[int, ...]]
    nodes_explored: int

    @property
    def exact(self) -> bool:
        return self.status is Status.OPTIMAL


class MalformedModel(ValueError):
    pass


class _Search:
    def __init__(self, model: IlpModel, cfg: SolverConfig):
        n = model.num_vars
        self.n = n
        self.obj = list(model.objective)
        for v, c in enumerate(self.obj):
            if c < 0:
                raise MalformedModel(f"variable {model.tags[v]} has negative coefficient {c}")
        self.cfg = cfg

        pack_rows: list[list[int]] = []
        gen_rows: list[tuple[list[int], list[int], int]] = []
        for con in model.constraints:
            variants = [(con.terms, con.rhs)]
            if con.sense == EQ:
                variants.append((tuple((v, -c) for v, c in con.terms), -con.rhs))
            for terms, rhs in variants:
                merged: dict[int, int] = {}
                for v, c in terms:
                    merged[v] = merged.get(v, 0) + c
                items = [(v, c) for v, c in merged.items() if c != 0]
                if rhs == 1 and items and all(c == 1 for _, c in items):
                    if len(items) > 1:
                        pack_rows.append([v for v, _ in items])
                    continue
                gen_rows.append(([v for v, _ in items], [c for _, c in items], rhs))

        self.pack_rows = pack_rows
        self.var_pack: list[list[int]] = [[] for _ in range(n)]
        for r, members in enumerate(pack_rows):
            for v in members:
                self.var_pack[v].append(r)
        # row used to cover a variable in the clique bound: its longest packing row
        self.cover_row = [max(rs, key=lambda r: (len(pack_rows[r]), -r)) if rs else -1
                          for rs in self.var_pack]

        self.gen_vars = [g[0] for g in gen_rows]
        self.gen_coefs = [g[1] for g in gen_rows]
        self.gen_rhs = [g[2] for g in gen_rows]
        self.gen_maxabs = [max((abs(c) for c in g[1]), default=0) for g in gen_rows]
        self.var_gen: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for r, (vs, cs, _) in enumerate(gen_rows):
            for v, c in zip(vs, cs):
                self.var_gen[v].append((r, c))
        self.minact = [sum(c for c in cs if c < 0) for cs in self.gen_coefs]
        self.fixact = [0] * len(gen_rows)
        self.violated = sum(1 for r in range(len(gen_rows)) if 0 > self.gen_rhs[r])

        self.forests = None
        if model.antichain_forests is not None:
            self.forests = [(f.parent, f.group_of_var) for f in model.antichain_forests]
            self._init_lagrange()

        self.order = sorted(range(n), key=lambda v: (-self.obj[v], v))
        self.val = [-1] * n
        self.trail: list[int] = []
        self.queue: list[int] = []
        self.fixed_value = 0
        self.best = -1
        self.best_assignment: Optional[tuple[int, ...]] = None
        self.nodes = 0
        self.stamp = [0] * len(pack_rows)
        self.stamp_id = 0

    # -- assignment bookkeeping -------------------------------------------

    def _set(self, v: int, x: int) -> None:
        self.val[v] = x
        self.trail.append(v)
        self.queue.append(v)
        if x == 1:
            self.fixed_value += self.obj[v]
        rhs = self.gen_rhs
        for r, c in self.var_gen[v]:
            if x == 1:
                before = self.fixact[r] > rhs[r]
                self.fixact[r] += c
                self.violated += (self.fixact[r] > rhs[r]) - before
                if c > 0:
                    self.minact[r] += c
            elif c < 0:
                self.minact[r] -= c

    def _undo(self, mark: int) -> None:
        rhs = self.gen_rhs
        trail = self.trail
        while len(trail) > mark:
            v = trail.pop()
            x = self.val[v]
            self.val[v] = -1
            if x == 1:
                self.fixed_value -= self.obj[v]
            for r, c in self.var_gen[v]:
                if x == 1:
                    before = self.fixact[r] > rhs[r]
                    self.fixact[r] -= c
                    self.violated += (self.fixact[r] > rhs[r]) - before
                    if c > 0:
                        self.minact[r] -= c
                elif c < 0:
                    self.minact[r] += c
        self.queue.clear()

    def _assign(self, v: int, x: int) -> bool:
        if self.val[v] != -1:
            return self.val[v] == x
        self._set(v, x)
        return self._propagate()

    def _propagate(self) -> bool:
        val = self.val
        queue = self.queue
        while queue:
            v = queue.pop()
            if val[v] == 1:
                for r in self.var_pack[v]:
                    for u in self.pack_rows[r]:
                        if u == v:
                            continue
                        if val[u] == 1:
                            queue.clear()
                            return False
                        if val[u] == -1:
                            self._set(u, 0)
            for r, _ in self.var_gen[v]:
                slack = self.gen_rhs[r] - self.minact[r]
                if slack < 0:
                    queue.clear()
                    return False
                if slack >= self.gen_maxabs[r]:
                    continue
                for u, c in zip(self.gen_vars[r], self.gen_coefs[r]):
                    if val[u] != -1:
                        continue
                    if c > slack:
                        self._set(u, 0)
                    elif -c > slack:
                        self._set(u, 1)
        return True

    # -- bounds -----------------------------------------------------------

    def _clique_bound(self) -> int:
        self.stamp_id += 1
        sid = self.stamp_id
        stamp = self.stamp
        val, obj = self.val, self.obj
        total = 0
        for v in self.order:
            if val[v] != -1 or obj[v] == 0:
                continue
            if any(stamp[r] == sid for r in self.var_pack[v]):
                continue
            total += obj[v]
            r = self.cover_row[v]
            if r >= 0:
                stamp[r] = sid
        return total

    def _forest_bound(self, parent, group) -> int:
        g = len(parent)
        best_here = [0] * g
        val, obj = self.val, self.obj
        for v in range(self.n):
            if val[v] == -1 and obj[v] > best_here[group[v]]:
                best_here[group[v]] = obj[v]
        below = [0] * g
        total = 0
        for k in range(g - 1, -1, -1):
            b = best_here[k] if best_here[k] > below[k] else below[k]
            p = parent[k]
            if p >= 0:
                below[p] += b
            else:
                total += b
        return total

    def _init_lagrange(self) -> None:
        # dualize the second forest's path rows; the first forest is solved by DP
        par2 = self.forests[1][0]
        has_child = [False] * len(par2)
        for p in par2:
            if p >= 0:
                has_child[p] = True
        self.leaves2 = [k for k in range(len(par2)) if not has_child[k]]
        self.lam = [0.0] * len(par2)
        self.lagrange_ok = not self.gen_vars
        self.root_done = False
        self.theta = 1.0

    def _lagrange_bound(self) -> int:
        """Best value over the multipliers tried, as an integer bound on the free part.

        Stops as soon as the node can be pruned.  May record an incumbent when
        the first forest's optimum happens to satisfy the dualized rows.
        """
        par1, g1 = self.forests[0]
        par2, g2 = self.forests[1]
        G1, G2 = len(par1), len(par2)
        val, obj = self.val, self.obj
        free = [v for v in range(self.n) if val[v] == -1 and obj[v] > 0]
        if not free:
            return 0
        target = self.best - self.fixed_value  # prune once the bound reaches this
        # rows with no free variable left play no part
        live = [0] * G2
        for v in free:
            live[g2[v]] = 1
        for k in range(G2):
            p = par2[k]
            if p >= 0 and live[p]:
                live[k] = 1
        leaves = [k for k in self.leaves2 if live[k]]
        lam = self.lam
        for k in self.leaves2:
            if not live[k]:
                lam[k] = 0.0

        # long run at the root; child nodes warm start from its multipliers
        if self.root_done:
            iters, patience, theta = ROUNDS_NODE, 4, max(self.theta, 0.05)
        else:
            iters, patience, theta = ROUNDS_ROOT, 20, 1.0
        self.root_done = True
        best_l = float("inf")
        stall = 0
        for it in range(iters):
            s = lam[:]
            for k in range(G2 - 1, -1, -1):
                p = par2[k]
                if p >= 0:
                    s[p] += s[k]
            bh = [0.0] * G1
            arg = [-1] * G1
            for v in free:
                c = obj[v] - s[g2[v]]
                k = g1[v]
                if c > bh[k]:
                    bh[k] = c
                    arg[k] = v
            below = [0.0] * G1
            total = 0.0
            for k in range(G1 - 1, -1, -1):
                b = bh[k] if bh[k] > below[k] else below[k]
                p = par1[k]
                if p >= 0:
                    below[p] += b
                else:
                    total += b
            lval = total + sum(lam[k] for k in leaves)
            if lval < best_l - 1e-9:
                best_l = lval
                stall = 0
            else:
                stall += 1
                if stall >= patience:
                    theta *= 0.5
                    stall = 0
            if int(best_l + 1e-6) <= target:
                break
            # primal solution of the relaxed problem
            blocked = [False] * G1
            cnt = [0] * G2
            picked = 0
            for k in range(G1):
                p = par1[k]
                if p >= 0 and blocked[p]:
                    blocked[k] = True
                    continue
                if arg[k] >= 0 and bh[k] > below[k]:
                    blocked[k] = True
                    cnt[g2[arg[k]]] += 1
                    picked += obj[arg[k]]
            for k in range(G2):
                p = par2[k]
                if p >= 0:
                    cnt[k] += cnt[p]
            grad = [(k, 1 - cnt[k]) for k in leaves]
            if self.lagrange_ok and picked > target and (it % 10 == 0 or it == iters - 1):
                self._repair_primal(arg, bh, below)
                target = self.best - self.fixed_value
                if int(best_l + 1e-6) <= target:
                    break
            norm = sum(g * g for _, g in grad)
            if norm == 0:
                break
            step = theta * lval / norm
            if step <= 1e-9:
                break
            for k, g in grad:
                x = lam[k] - step * g
                lam[k] = x if x > 0.0 else 0.0
        if iters == ROUNDS_ROOT:
            self.theta = theta
        return int(best_l + 1e-6)

    def _repair_primal(self, arg, bh, below) -> None:
        """Turn the relaxed pick into a feasible solution and keep it if it is better.

        The relaxed pick is an antichain in the first forest; its variables are
        kept greedily while they stay an antichain in the second forest, then
        the remaining free variables fill in where both forests allow.
        """
        par1, g1 = self.forests[0]
        taken = [False] * len(par1)
        relaxed = []
        for k in range(len(par1)):
            p = par1[k]
            if p >= 0 and taken[p]:
                taken[k] = True
                continue
            if arg[k] >= 0 and bh[k] > below[k]:
                taken[k] = True
                relaxed.append(arg[k])
        obj = self.obj
        relaxed.sort(key=lambda v: (-obj[v], v))
        sides = [(par, grp, [False] * len(par), [0] * len(par)) for par, grp in self.forests]

        def fits(v):
            for par, grp, chosen, sub in sides:
                k = grp[v]
                if sub[k]:
                    return False
                k = par[k]
                while k >= 0:
                    if chosen[k]:
                        return False
                    k = par[k]
            return True

        def take(v):
            for par, grp, chosen, sub in sides:
                k = grp[v]
                chosen[k] = True
                while k >= 0:
                    sub[k] += 1
                    k = par[k]

        val = self.val
        picked = [v for v in range(self.n) if val[v] == 1]
        for v in picked:
            take(v)
        value = self.fixed_value
        for v in relaxed + [v for v in self.order if val[v] == -1 and obj[v] > 0]:
            if val[v] == -1 and obj[v] > 0 and fits(v):
                take(v)
                val[v] = 2  # temporary marker, cleared below
                picked.append(v)
                value += obj[v]
        for v in picked:
            if val[v] == 2:
                val[v] = -1
        if value <= self.best:
            return
        on = set(picked)
        for members in self.pack_rows:
            if sum(1 for v in members if v in on) > 1:
                return
        self.best = value
        self.best_assignment = tuple(1 if v in on else 0 for v in range(self.n))

    def _bound(self) -> int:
        if self.forests is not None:
            free = min(self._forest_bound(p, g) for p, g in self.forests)
            if self.fixed_value + free > self.best:
                free = min(free, self._lagrange_bound())
        else:
            free = self._clique_bound()
        return self.fixed_value + free

    # -- search -----------------------------------------------------------

    def _evaluate(self) -> Optional[int]:
        """Bound, record an incumbent if possible, and pick a branching variable."""
        self.nodes += 1
        ub = self._bound()
        if ub <= self.best:
            return None
        if self.violated == 0 and self.fixed_value > self.best:
            # every free variable at 0 is feasible: packing rows are already
            # enforced and no other row is exceeded by the fixed part
            self.best = self.fixed_value
            self.best_assignment = tuple(1 if x == 1 else 0 for x in self.val)
            if ub <= self.best:
                return None
        val = self.val
        for v in self.order:
            if val[v] == -1:
                return v
        return None

    def run(self) -> IlpSolution:
        cfg = self.cfg
        deadline = None if cfg.time_limit is None else time.perf_counter() + cfg.time_limit
        completed = True
        self.queue.extend(range(self.n))  # check rows that start out tight
        stack: list[list[int]] = []
        if self._propagate():
            v = self._evaluate()
            if v is not None:
                stack.append([v, 0, len(self.trail)])
        while stack:
            frame = stack[-1]
            v, k, mark = frame
            self._undo(mark)
            if k == 2:
                stack.pop()
                continue
            if (cfg.node_limit is not None and self.nodes >= cfg.node_limit) or (
                deadline is not None and time.perf_counter() > deadline
            ):
                completed = False
                break
            frame[1] = k + 1
            if self._assign(v, 1 - k):
                nxt = self._evaluate()
                if nxt is not None:
                    stack.append([nxt, 0, len(self.trail)])
        self._undo(0)
        if not completed:
            status = Status.TIMEOUT
        elif self.best_assignment is None:
            status = Status.INFEASIBLE
        else:
            status = Status.OPTIMAL
        return IlpSolution(
            status=status,
            best_value=None if self.best_assignment is None else self.best,
            assignment=self.best_assignment,
            nodes_explored=self.nodes,
        )


def solve(model: IlpModel, cfg: SolverConfig | None = None) -> IlpSolution:
    return _Search(model, cfg or SolverConfig()).run()
