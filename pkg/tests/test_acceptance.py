"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""
import contextlib
import functools
import itertools
import random
import time

import pytest

from treedist.cost import mapping_cost, unit_cost
from treedist.dp import distance, weight_table
from treedist.ilp import build_antichain_pairwise, build_dp_subproblem, build_naive_tai
from treedist.mapping import DistanceClass, is_valid
from treedist.matching import FORBIDDEN, max_weight_bijection, max_weight_matching
from treedist.solver import SolverConfig, Status, solve
from treedist.tree import is_ancestor, parse_bracket, random_tree

from conftest import enum_bijection, enum_matching

UNIT = unit_cost()
CLASSES = list(DistanceClass)
CHAIN = [DistanceClass.EDIT, DistanceClass.SEG, DistanceClass.BOTSEG, DistanceClass.BOT]


@pytest.fixture
def criterion(capsys):
    @contextlib.contextmanager
    def report(number, title):
        ok = False
        try:
            yield
            ok = True
        finally:
            with capsys.disabled():
                print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'} {title}")
    return report


def sized_pair(rng, lo, hi, max_degree=3, labels=3):
    total = rng.randint(lo, hi)
    n1 = rng.randint(1, total - 1)
    return (random_tree(rng, n1, max_degree, labels),
            random_tree(rng, total - n1, max_degree, labels))


@functools.cache
def small_runs():
    """Every method on every class for 200 pairs of at most 12 nodes in total."""
    rng = random.Random(2024)
    runs = []
    for _ in range(200):
        t1, t2 = sized_pair(rng, 2, 12)
        res = {(cls, method): distance(t1, t2, UNIT, cls, method)
               for cls in CLASSES for method in ("dp", "naive", "oracle")}
        runs.append((t1, t2, res))
    return runs


@functools.cache
def chain_runs():
    rng = random.Random(4040)
    runs = []
    for _ in range(100):
        t1, t2 = sized_pair(rng, 2, 40, max_degree=4)
        runs.append((t1, t2, {(cls, "dp"): distance(t1, t2, UNIT, cls) for cls in CLASSES}))
    return runs


def test_cross_method_exactness(criterion):
    with criterion(1, "dp, naive and oracle agree on 200 pairs for all four classes"):
        runs = small_runs()
        assert len(runs) >= 200
        for t1, t2, res in runs:
            assert len(t1) + len(t2) <= 12
            for cls in CLASSES:
                got = {m: res[cls, m].distance for m in ("dp", "naive", "oracle")}
                assert len(set(got.values())) == 1, (cls, t1, t2, got)
                assert all(res[cls, m].stats.status is Status.OPTIMAL for m in got)


def test_subproblem_equivalence(criterion):
    with criterion(2, "subproblem IP and pairwise antichain IP have equal optima"):
        count = 0
        for t1, t2, _ in small_runs():
            wt = weight_table("edit", t1, t2, UNIT)
            for x in t1.nodes:
                for y in t2.nodes:
                    if t1.is_leaf(x) or t2.is_leaf(y):
                        continue
                    a = solve(build_dp_subproblem(t1, x, t2, y, wt))
                    b = solve(build_antichain_pairwise(t1, x, t2, y, wt))
                    assert a.status is b.status is Status.OPTIMAL
                    assert a.best_value == b.best_value, (t1, x, t2, y)
                    count += 1
        assert count > 0


def test_hungarian_against_enumeration(criterion):
    with criterion(3, "matching and bijection agree with enumeration on 500 matrices"):
        rng = random.Random(33)
        for _ in range(500):
            p, q = rng.randint(1, 6), rng.randint(1, 6)
            w = [[FORBIDDEN if rng.random() < 0.1 else rng.randint(0, 20) for _ in range(q)]
                 for _ in range(p)]
            v, pairs = max_weight_matching(w)
            assert v == enum_matching(w) == sum(w[i][j] for i, j in pairs)
            got = max_weight_bijection(w)
            assert (None if got is None else got[0]) == enum_bijection(w)


def test_chain_inequality(criterion):
    with criterion(4, "edit <= seg <= botseg <= bot on 100 pairs up to 40 nodes"):
        runs = chain_runs()
        assert len(runs) >= 100
        for t1, t2, res in runs:
            assert len(t1) + len(t2) <= 40
            d = [res[cls, "dp"].distance for cls in CHAIN]
            assert all(res[cls, "dp"].stats.exact for cls in CHAIN)
            assert d == sorted(d), (t1, t2, d)


def test_identity_and_symmetry(criterion):
    with criterion(5, "identity on 50 trees and symmetry on 50 pairs"):
        rng = random.Random(55)
        for _ in range(50):
            t = random_tree(rng, rng.randint(1, 20), 4, 3)
            for cls in CLASSES:
                assert distance(t, t, UNIT, cls).distance == 0
        for _ in range(50):
            t1, t2 = sized_pair(rng, 2, 20)
            for cls in CLASSES:
                assert distance(t1, t2, UNIT, cls).distance == distance(t2, t1, UNIT, cls).distance


def test_variant_scalability(criterion):
    with criterion(6, "seg, botseg and bot on 20 pairs of 80-100 nodes, each optimal within 10 s"):
        rng = random.Random(66)
        cfg = SolverConfig(time_limit=10)
        for _ in range(20):
            total = rng.randint(80, 100)
            n1 = rng.randint(total // 3, total - total // 3)
            t1 = random_tree(rng, n1, 4, 3)
            t2 = random_tree(rng, total - n1, 4, 3)
            for cls in ("seg", "botseg", "bot"):
                start = time.perf_counter()
                res = distance(t1, t2, UNIT, cls, solver_cfg=cfg)
                elapsed = time.perf_counter() - start
                assert res.stats.status is Status.OPTIMAL, (cls, t1, t2)
                assert elapsed <= 10, (cls, elapsed)


def test_edit_scalability(criterion):
    with criterion(7, "edit on 10 pairs of at most 30 nodes, each optimal within 60 s"):
        rng = random.Random(77)
        cfg = SolverConfig(time_limit=60)
        for _ in range(10):
            t1, t2 = sized_pair(rng, 25, 30, max_degree=4)
            start = time.perf_counter()
            res = distance(t1, t2, UNIT, "edit", solver_cfg=cfg)
            elapsed = time.perf_counter() - start
            assert res.stats.status is Status.OPTIMAL, (t1, t2)
            assert elapsed <= 60


def order_violating_pairs(t1, t2):
    """Count unordered pairs of node pairs, distinct in both coordinates, that break ancestry."""
    count = 0
    pairs = [(x, y) for x in t1.nodes for y in t2.nodes]
    for (x, y), (x2, y2) in itertools.combinations(pairs, 2):
        if x != x2 and y != y2 and (
            is_ancestor(t1, x, x2) != is_ancestor(t2, y, y2)
            or is_ancestor(t1, x2, x) != is_ancestor(t2, y2, y)
        ):
            count += 1
    return count


def test_model_shapes(criterion):
    with criterion(8, "subproblem row count and naive pairwise row count"):
        rng = random.Random(88)
        for _ in range(30):
            t1, t2 = sized_pair(rng, 4, 24, max_degree=4)
            wt = weight_table("edit", t1, t2, UNIT)
            for x in t1.nodes:
                for y in t2.nodes:
                    if t1.is_leaf(x) or t2.is_leaf(y):
                        continue
                    m = build_dp_subproblem(t1, x, t2, y, wt)
                    assert len(m.constraints) == len(t1.leaves_under(x)) + len(t2.leaves_under(y))
        t1, t2 = parse_bracket("a(b)"), parse_bracket("c(d)")
        derived = order_violating_pairs(t1, t2)
        assert derived == 1
        m = build_naive_tai(t1, t2, UNIT)
        # one row per node of each tree, then the pairwise rows
        assert len(m.constraints) - len(t1) - len(t2) == derived


def test_reconstruction_soundness(criterion):
    with criterion(9, "returned mappings are valid and cost the reported distance"):
        checked = 0
        for t1, t2, res in small_runs() + chain_runs():
            for (cls, method), r in res.items():
                assert is_valid(cls, t1, t2, r.mapping), (cls, method, t1, t2)
                assert mapping_cost(UNIT, t1, t2, r.mapping) == r.distance, (cls, method, t1, t2)
                checked += 1
        assert checked == 200 * 12 + 100 * 4
