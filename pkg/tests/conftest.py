import itertools
import random

import pytest
from hypothesis import strategies as st

from treedist.tree import Tree, random_tree


def random_pair(rng: random.Random, max_total: int, labels: int = 3, max_degree: int = 3):
    n1 = rng.randint(1, max_total - 1)
    n2 = rng.randint(1, max_total - n1)
    return random_tree(rng, n1, max_degree, labels), random_tree(rng, n2, max_degree, labels)


def enumerate_optimum(model):
    """Best feasible objective by trying every 0/1 assignment (None if infeasible)."""
    best = None
    for bits in itertools.product((0, 1), repeat=model.num_vars):
        if model.is_feasible(bits):
            v = model.value_of(bits)
            if best is None or v > best:
                best = v
    return best


def feasible_sets(model):
    return {
        model.decode(bits)
        for bits in itertools.product((0, 1), repeat=model.num_vars)
        if model.is_feasible(bits)
    }


def enum_matching(w):
    p, q = len(w), len(w[0]) if w else 0
    best = 0
    for k in range(min(p, q) + 1):
        for rows in itertools.combinations(range(p), k):
            for cols in itertools.permutations(range(q), k):
                if all(w[i][j] is not None for i, j in zip(rows, cols)):
                    best = max(best, sum(w[i][j] for i, j in zip(rows, cols)))
    return best


def enum_bijection(w):
    p, q = len(w), len(w[0]) if w else 0
    if p != q:
        return None
    vals = [
        sum(w[i][j] for i, j in enumerate(perm))
        for perm in itertools.permutations(range(q))
        if all(w[i][j] is not None for i, j in enumerate(perm))
    ]
    return max(vals) if vals else None


@st.composite
def trees(draw, max_nodes: int = 8, labels: str = "abc", max_degree: int = 3) -> Tree:
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(1, max_nodes))
    return random_tree(random.Random(seed), n, max_degree, len(labels))


@pytest.fixture
def rng():
    return random.Random(12345)
