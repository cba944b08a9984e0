"""Negative, positive and total complexity of a weighted learning graph."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .domain import DEFAULT_ENUMERATION_CAP, FunctionSpec, InputPoint, enumerate_inputs, evaluate, format_input
from .errors import InfeasibleError, InputError
from .flows import DEFAULT_TOL, Flow, _cost, optimal_flow
from .graph import LearningGraph, Weight, realize


def negative_complexity(G: LearningGraph, w: Weight, y: Sequence[int], exact: bool = False):
    """``sum_e w_e(y)`` over every arc of the instance."""
    wx = realize(G, w, y, exact=exact)
    return sum(wx, Fraction(0)) if exact else float(wx.sum())


@dataclass
class ComplexityReport:
    negative: dict[InputPoint, float] = field(default_factory=dict)
    positive: dict[InputPoint, float] = field(default_factory=dict)
    flows: dict[InputPoint, Flow] = field(default_factory=dict, repr=False)

    @property
    def N(self):
        return max(self.negative.values(), default=0)

    @property
    def P(self):
        return max(self.positive.values(), default=0)

    @property
    def C(self) -> float:
        return math.sqrt(float(self.N) * float(self.P))

    @property
    def worst_negative(self) -> InputPoint | None:
        return max(self.negative, key=self.negative.get, default=None)

    @property
    def worst_positive(self) -> InputPoint | None:
        return max(self.positive, key=self.positive.get, default=None)

    def summary(self) -> str:
        lines = [
            f"N = {self.N}",
            f"P = {self.P}",
            f"C = {self.C!r}",
            f"negatives = {len(self.negative)}",
            f"positives = {len(self.positive)}",
        ]
        if self.negative:
            lines.append(f"worst negative = {format_input(self.worst_negative)}")
        if self.positive:
            lines.append(f"worst positive = {format_input(self.worst_positive)}")
        return "\n".join(lines)


def _split_domain(f: FunctionSpec, inputs: Iterable[Sequence[int]] | None, cap: int):
    if inputs is None:
        inputs = enumerate_inputs(f, "all", cap=cap)
    pos, neg = [], []
    for x in inputs:
        (pos if evaluate(f, x) else neg).append(tuple(x))
    return pos, neg


def graph_complexity(
    G: LearningGraph,
    w: Weight,
    f: FunctionSpec,
    inputs: Iterable[Sequence[int]] | None = None,
    flows: Mapping[InputPoint, Flow] | None = None,
    exact: bool = False,
    jobs: int = 1,
    cap: int = DEFAULT_ENUMERATION_CAP,
    tol: float = DEFAULT_TOL,
) -> ComplexityReport:
    """``N = max_y sum w``, ``P = max_x`` minimal flow cost, ``C = sqrt(N P)``.

    ``inputs`` restricts the domain (default: the whole cube).  When
    ``flows`` is given those flows are costed instead of solving for the
    optimum, which gives the complexity of that particular flow family.
    """
    pos, neg = _split_domain(f, inputs, cap)
    report = ComplexityReport()
    for y in neg:
        report.negative[y] = negative_complexity(G, w, y, exact=exact)

    def solve(x):
        if flows is not None:
            if x not in flows:
                raise InputError(f"no flow supplied for positive input {format_input(x)}")
            p = flows[x]
        else:
            try:
                p = optimal_flow(G, w, x, f, exact=exact, tol=tol)
            except InfeasibleError as exc:
                raise InfeasibleError(f"positive input {format_input(x)} is infeasible: {exc}") from exc
        return x, p, _cost(realize(G, w, x, exact=p.exact), p.values, x)

    if jobs > 1 and len(pos) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(solve, pos))
    else:
        results = [solve(x) for x in pos]
    for x, p, cost in results:
        report.flows[x] = p
        report.positive[x] = cost
    return report
