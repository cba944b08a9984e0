"""Learning-graph structure and arc weight functions.

Vertices are subsets of ``{0..n-1}`` stored as bit masks; an arc goes from
``S`` to ``S | {j}``.  A weight function is any callable
``weight(arc, alpha)`` where ``alpha`` is the tuple of symbols on the arc's
origin, in increasing index order.  The evaluator never sees symbols outside
the origin, which is how weight locality is enforced.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import comb
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .domain import FunctionSpec, is_accepting_assignment, restrict
from .errors import InputError, ResourceCapError

DEFAULT_VERTEX_CAP = 2_000_000


def mask_of(S: Iterable[int]) -> int:
    out = 0
    for i in S:
        out |= 1 << i
    return out


def indices_of(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


@dataclass(frozen=True)
class Arc:
    id: int
    origin: int
    loaded: int
    target: int

    @cached_property
    def indices(self) -> tuple[int, ...]:
        return indices_of(self.origin)

    @property
    def size(self) -> int:
        return self.origin.bit_count()


class LearningGraph:
    """A layered DAG on subsets of ``[n]``; immutable after construction."""

    def __init__(self, n: int, depth: int, vertices: Sequence[int], arcs: Sequence[tuple[int, int]]):
        self.n = n
        self.depth = depth
        self.vertices = list(vertices)
        self.vertex_index = {v: i for i, v in enumerate(self.vertices)}
        if len(self.vertex_index) != len(self.vertices):
            raise InputError("duplicate vertex labels")
        if 0 not in self.vertex_index:
            raise InputError("the empty set must be a vertex")
        self.arcs: list[Arc] = []
        self.arc_index: dict[tuple[int, int], int] = {}
        for origin, j in arcs:
            if origin >> j & 1:
                raise InputError(f"arc loads index {j} already in its origin")
            target = origin | (1 << j)
            if origin not in self.vertex_index or target not in self.vertex_index:
                raise InputError("arc endpoint is not a vertex")
            if (origin, j) in self.arc_index:
                raise InputError("duplicate arc")
            arc = Arc(len(self.arcs), origin, j, target)
            self.arc_index[(origin, j)] = arc.id
            self.arcs.append(arc)
        self.arc_tail = np.array([self.vertex_index[a.origin] for a in self.arcs], dtype=np.int64)
        self.arc_head = np.array([self.vertex_index[a.target] for a in self.arcs], dtype=np.int64)

    def __repr__(self) -> str:
        return f"LearningGraph(n={self.n}, depth={self.depth}, vertices={len(self.vertices)}, arcs={len(self.arcs)})"

    @property
    def root(self) -> int:
        return self.vertex_index[0]

    def arc(self, origin: int, j: int) -> Arc:
        return self.arcs[self.arc_index[(origin, j)]]

    @cached_property
    def out_arcs(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in self.vertices]
        for a in self.arcs:
            out[self.vertex_index[a.origin]].append(a.id)
        return out

    @cached_property
    def in_arcs(self) -> list[list[int]]:
        inc: list[list[int]] = [[] for _ in self.vertices]
        for a in self.arcs:
            inc[self.vertex_index[a.target]].append(a.id)
        return inc

    def is_antichain(self, masks: Iterable[int]) -> bool:
        ms = list(masks)
        return all(a & b != a for a, b in itertools.permutations(ms, 2))

    def accepting(self, f: FunctionSpec, x: Sequence[int]) -> np.ndarray:
        """Boolean array: does vertex ``S`` contain a 1-certificate of ``x``."""
        return np.array(
            [is_accepting_assignment(f, idx, restrict(x, idx)) for idx in map(indices_of, self.vertices)],
            dtype=bool,
        )

    def closed_under_index_permutations(self) -> bool:
        by_size: dict[int, int] = {}
        for v in self.vertices:
            by_size[v.bit_count()] = by_size.get(v.bit_count(), 0) + 1
        full_layers = all(cnt == comb(self.n, s) for s, cnt in by_size.items())
        arcs_ok = all(
            (v, j) in self.arc_index
            for v in self.vertices
            for j in range(self.n)
            if not v >> j & 1 and (v | 1 << j) in self.vertex_index
        )
        return full_layers and arcs_ok


def build_layered_graph(
    n: int,
    depth: int,
    vertex_filter: Callable[[frozenset[int]], bool] | None = None,
    cap: int = DEFAULT_VERTEX_CAP,
) -> LearningGraph:
    """All subsets of size at most ``depth`` admitted by ``vertex_filter``,
    with every arc between admitted consecutive layers."""
    if not 0 <= depth <= n:
        raise InputError(f"depth {depth} must lie in [0, n={n}]")
    total = sum(comb(n, s) for s in range(depth + 1))
    if total > cap:
        raise ResourceCapError(f"{total} vertices exceed the vertex cap {cap}")
    if vertex_filter is not None and not vertex_filter(frozenset()):
        raise InputError("vertex filter must admit the empty set")
    vertices: list[int] = []
    for s in range(depth + 1):
        for combo in itertools.combinations(range(n), s):
            if vertex_filter is None or vertex_filter(frozenset(combo)):
                vertices.append(mask_of(combo))
    present = set(vertices)
    arcs = [(v, j) for v in vertices for j in range(n) if not v >> j & 1 and (v | 1 << j) in present]
    return LearningGraph(n, depth, vertices, arcs)


# --- weight functions -------------------------------------------------------

Weight = Callable[[Arc, tuple[int, ...]], float]


class ConstantWeights:
    def __init__(self, value=1):
        self.value = value

    def __call__(self, arc: Arc, alpha: tuple[int, ...]):
        return self.value


class LayerWeights:
    """Weight depends only on ``|S|`` (the size classing)."""

    def __init__(self, values: Mapping[int, float], default=0):
        self.values = dict(values)
        self.default = default

    def __call__(self, arc: Arc, alpha: tuple[int, ...]):
        return self.values.get(len(alpha), self.default)


class TableWeights:
    """Explicit ``(arc id, alpha) -> weight`` table; unlisted pairs get ``default``."""

    def __init__(self, table: Mapping[tuple[int, tuple[int, ...]], float], default=0):
        self.table = dict(table)
        self.default = default

    def __call__(self, arc: Arc, alpha: tuple[int, ...]):
        return self.table.get((arc.id, tuple(alpha)), self.default)


class ScaledWeights:
    def __init__(self, base: Weight, factor):
        if factor <= 0:
            raise InputError("scale factor must be positive")
        self.base = base
        self.factor = factor

    def __call__(self, arc: Arc, alpha: tuple[int, ...]):
        return self.factor * self.base(arc, alpha)


def realize(G: LearningGraph, w: Weight, x: Sequence[int], exact: bool = False):
    """Arc weights of the instance ``G(x)``: a float array, or a list of
    Fractions when ``exact``."""
    vals = []
    for arc in G.arcs:
        v = w(arc, restrict(x, arc.indices))
        if v < 0:
            raise InputError(f"negative weight {v} on arc {arc.id}")
        vals.append(Fraction(v) if exact else float(v))
    return vals if exact else np.asarray(vals, dtype=float)


def tabulate(G: LearningGraph, w: Weight, inputs: Iterable[Sequence[int]]) -> TableWeights:
    """Freeze ``w`` on every (arc, assignment) pair realised by ``inputs``."""
    table = {}
    for x in inputs:
        for arc in G.arcs:
            alpha = restrict(x, arc.indices)
            key = (arc.id, alpha)
            if key not in table:
                table[key] = w(arc, alpha)
    return TableWeights(table)
