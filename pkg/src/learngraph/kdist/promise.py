"""Promised k-distinctness instances: a block layout with ``ell_t``
``t``-tuples, a marked ``k``-tuple for the positive variant, and slack
filled with fresh singletons."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..domain import FunctionSpec, InputPoint, evaluate
from ..errors import InputError
from ..symmetry import Layout


@dataclass(frozen=True)
class PromisedInstance:
    k: int
    n: int
    m: int
    layout: Layout
    positive: InputPoint
    negative: InputPoint

    @property
    def ell(self) -> tuple[int, ...]:
        return self.layout.ell

    @property
    def support(self) -> tuple[int, ...]:
        return self.layout.support

    @property
    def marked(self) -> tuple[int, ...]:
        return self.layout.marked

    @property
    def slack(self) -> tuple[int, ...]:
        used = set(self.support) | set(self.marked)
        return tuple(i for i in range(self.n) if i not in used)

    @property
    def f(self) -> FunctionSpec:
        return FunctionSpec.kdist(self.k, self.n, self.m)

    def tuple_of(self) -> dict[int, tuple[int, ...]]:
        """Index -> the promised tuple containing it."""
        return {i: g for groups in self.layout.tuples for g in groups for i in g}


def build_promised_instance(k: int, n: int, ell, seed: int | None = 0, m: int | None = None) -> PromisedInstance:
    """Lay out the blocks over a seeded permutation of the indices
    (``seed=None`` keeps index order).  Every tuple gets its own value."""
    ell = tuple(int(v) for v in ell)
    if k < 2 or len(ell) != k - 1 or any(v < 0 for v in ell):
        raise InputError(f"need k >= 2 and {k - 1} nonnegative promise counts")
    used = sum(t * c for t, c in enumerate(ell, start=1))
    if used + k > n:
        raise InputError(f"promise needs {used} + {k} marked indices but n={n}")
    m = n if m is None else m
    order = list(range(n)) if seed is None else [int(i) for i in np.random.Generator(np.random.Philox(seed)).permutation(n)]
    pos = 0
    tuples = []
    for t, c in enumerate(ell, start=1):
        groups = []
        for _ in range(c):
            groups.append(tuple(sorted(order[pos : pos + t])))
            pos += t
        tuples.append(tuple(groups))
    marked = tuple(sorted(order[pos : pos + k]))
    pos += k
    slack = order[pos:]
    x = [0] * n
    value = 1
    for groups in tuples:
        for g in groups:
            for i in g:
                x[i] = value
            value += 1
    y = list(x)
    for i in marked:
        x[i] = value
    value_after_marked = value + 1
    for i in marked:
        y[i] = value
        value += 1
    v = max(value, value_after_marked)
    for i in slack:
        x[i] = y[i] = v
        v += 1
    if v - 1 > m:
        raise InputError(f"alphabet of size {m} cannot hold {v - 1} distinct values")
    inst = PromisedInstance(k, n, m, Layout(k, tuple(tuples), marked), tuple(x), tuple(y))
    assert evaluate(inst.f, inst.positive) == 1 and evaluate(inst.f, inst.negative) == 0
    return inst
