"""The baseline k-distinctness learning graph: load ``r + k`` elements with
no restriction, route each positive input's flow around a marked
``k``-tuple first and onto it last."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

from ..domain import FunctionSpec, InputPoint, enumerate_inputs
from ..errors import InputError
from ..flows import Flow
from ..graph import LayerWeights, LearningGraph, build_layered_graph
from .flowbuild import FlowBuilder


def baseline_specialities(k: int, n: int, r: int) -> list[Fraction]:
    """Per-step specialities: ``1`` on the ``r`` first steps, then
    ``n^i / r^(i-1)`` on step ``i`` of the second stage."""
    return [Fraction(1)] * r + [Fraction(n**i, r ** (i - 1)) for i in range(1, k + 1)]


def baseline_step_flow(k: int, n: int, r: int) -> list[Fraction]:
    """Flow through one used arc on each step (``1 / #used arcs``)."""
    out = [Fraction(1, comb(n - k, d) * (n - k - d)) for d in range(r)]
    out += [Fraction(1, comb(n - k, r) * comb(k, i - 1) * (k - i + 1)) for i in range(1, k + 1)]
    return out


def baseline_weights(k: int, n: int, r: int) -> LayerWeights:
    """``pi / sqrt(tau)`` per step, stored as the rational nearest the double."""
    values = {}
    for d, (pi, tau) in enumerate(zip(baseline_step_flow(k, n, r), baseline_specialities(k, n, r))):
        values[d] = Fraction(float(pi) / math.sqrt(tau))
    return LayerWeights(values)


def _check(k: int, n: int, r: int) -> None:
    if k < 2:
        raise InputError("k must be at least 2")
    if r < 1:
        raise InputError("r must be at least 1")
    if r + k > n:
        raise InputError(f"depth r + k = {r + k} exceeds n = {n}")


def marked_tuple(x, k: int) -> tuple[int, ...]:
    """Canonical witness: the first ``k`` positions of the smallest value
    occurring at least ``k`` times."""
    counts = Counter(x)
    value = min(v for v, c in counts.items() if c >= k)
    return tuple(i for i, v in enumerate(x) if v == value)[:k]


def baseline_flow(G: LearningGraph, x, k: int, r: int) -> Flow:
    M = marked_tuple(x, k)
    fb = FlowBuilder(G, x)
    rest = [i for i in range(G.n) if i not in M]
    for S, p in fb.uniform_stage(rest, r).items():
        fb.all_orders(S, M, p)
    return fb.flow()


@dataclass
class BaselineConstruction:
    k: int
    n: int
    m: int
    r: int
    graph: LearningGraph
    weights: LayerWeights
    flows: dict[InputPoint, Flow] = field(repr=False)

    @property
    def f(self) -> FunctionSpec:
        return FunctionSpec.kdist(self.k, self.n, self.m)


def build_baseline_graph(k: int, n: int, m: int, r: int, cap: int = 2_000_000) -> BaselineConstruction:
    _check(k, n, r)
    f = FunctionSpec.kdist(k, n, m)
    G = build_layered_graph(n, r + k, cap=cap)
    flows = {x: baseline_flow(G, x, k, r) for x in enumerate_inputs(f, "positive", cap=cap)}
    return BaselineConstruction(k, n, m, r, G, baseline_weights(k, n, r), flows)


@dataclass
class CollapsedRow:
    step: int
    klass: str
    size: int
    speciality: Fraction

    @property
    def sqrt_t(self) -> float:
        return math.sqrt(self.speciality)


@dataclass
class CollapsedEstimate:
    rows: list[CollapsedRow]
    N: float
    P: float

    @property
    def C(self) -> float:
        return math.sqrt(self.N * self.P)

    @property
    def table_estimate(self) -> float:
        return sum(row.sqrt_t for row in self.rows)

    def csv(self) -> str:
        lines = ["step,class,size,speciality,sqrtT"]
        lines += [f"{r.step},{r.klass},{r.size},{float(r.speciality)!r},{r.sqrt_t!r}" for r in self.rows]
        return "\n".join(lines) + "\n"


def baseline_collapsed(k: int, n: int, r: int) -> CollapsedEstimate:
    """Exact ``N``, ``P`` of the baseline from class counts alone.

    Step ``d`` has ``C(n,d)(n-d)`` arcs on every negative input and ``U_d``
    flow-carrying arcs with flow ``1/U_d`` each, so with ``w = pi/sqrt(tau)``
    ``N = sum (A_d/U_d)/sqrt(tau_d)`` and ``P = sum sqrt(tau_d)``.
    """
    _check(k, n, r)
    rows = []
    N = 0.0
    P = 0.0
    for d, (pi, tau) in enumerate(zip(baseline_step_flow(k, n, r), baseline_specialities(k, n, r))):
        arcs = comb(n, d) * (n - d)
        ratio = float(Fraction(arcs) * pi)
        N += ratio / math.sqrt(tau)
        P += math.sqrt(tau)
        klass = "first" if d < r else f"second{d - r + 1}"
        rows.append(CollapsedRow(d + 1, klass, arcs, tau))
    return CollapsedEstimate(rows, N, P)
