import itertools
import random
from fractions import Fraction

import pytest

from learngraph.domain import FunctionSpec
from learngraph.graph import LearningGraph, build_layered_graph, mask_of


def or_like():
    """n=2, m=2, f = [some x_i = 2], depth 1, unit weights."""
    return FunctionSpec.parse("any:n=2,m=2,value=2"), build_layered_graph(2, 1)


def random_small_graph(rng: random.Random, max_arcs: int = 12) -> LearningGraph:
    """A random sub-lattice of the Boolean lattice with at most ``max_arcs`` arcs."""
    while True:
        n = rng.randint(2, 4)
        depth = rng.randint(1, n)
        keep = {0}
        for s in range(1, depth + 1):
            for combo in itertools.combinations(range(n), s):
                if rng.random() < 0.7:
                    keep.add(mask_of(combo))
        verts = sorted(keep, key=lambda v: (v.bit_count(), v))
        arcs = [(v, j) for v in verts for j in range(n) if not v >> j & 1 and (v | 1 << j) in keep]
        if 1 <= len(arcs) <= max_arcs:
            return LearningGraph(n, depth, verts, arcs)


def random_rational(rng: random.Random, lo: int = 1, hi: int = 9) -> Fraction:
    return Fraction(rng.randint(lo, hi), rng.randint(lo, hi))


@pytest.fixture
def rng():
    return random.Random(20261019)
