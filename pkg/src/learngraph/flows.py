"""Flows on learning-graph instances: cost, validation, the optimal
(electrical) flow, a brute-force quadratic-program oracle, and conditioning.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .domain import FunctionSpec, format_input
from .errors import (
    ConditioningError,
    DegenerateInstanceError,
    InfeasibleError,
    InputError,
)
from .exact import solve_fraction
from .graph import LearningGraph, Weight, realize

DENSE_LIMIT = 2000
DEFAULT_TOL = 1e-9


@dataclass
class Flow:
    """Per-arc flow values for one positive input.

    ``values`` is a float array, or a list of Fractions on the exact path.
    """

    x: tuple[int, ...]
    values: Sequence

    @property
    def exact(self) -> bool:
        return not isinstance(self.values, np.ndarray)

    def __getitem__(self, arc_id: int):
        return self.values[arc_id]

    def support(self) -> list[int]:
        return [i for i, v in enumerate(self.values) if v != 0]


def _cost(wx: Sequence, values: Sequence, x=None):
    total = Fraction(0) if not isinstance(values, np.ndarray) else 0.0
    for i, (p, w) in enumerate(zip(values, wx)):
        if p == 0:
            continue
        if w == 0:
            where = f" for input {format_input(x)}" if x is not None else ""
            raise InfeasibleError(f"flow {p} on zero-weight arc {i}{where}")
        total += p * p / w
    return total


def flow_cost(G: LearningGraph, w: Weight, x: Sequence[int], p: Flow):
    """``sum p_e^2 / w_e(x)`` with ``0/0 = 0``."""
    return _cost(realize(G, w, x, exact=p.exact), p.values, x)


@dataclass
class FlowReport:
    source_intensity: float
    conservation: dict[int, float] = field(default_factory=dict)
    absorption: dict[int, float] = field(default_factory=dict)
    zero_weight_violations: list[int] = field(default_factory=list)
    tol: float = DEFAULT_TOL

    @property
    def intensity_ok(self) -> bool:
        return abs(self.source_intensity - 1) <= self.tol

    @property
    def max_conservation_residual(self) -> float:
        return max((abs(v) for v in self.conservation.values()), default=0.0)

    @property
    def conservation_violations(self) -> list[int]:
        return [v for v, r in self.conservation.items() if abs(r) > self.tol]

    @property
    def negative_absorption(self) -> list[int]:
        return [v for v, a in self.absorption.items() if a < -self.tol]

    @property
    def ok(self) -> bool:
        return (
            self.intensity_ok
            and not self.conservation_violations
            and not self.negative_absorption
            and not self.zero_weight_violations
        )

    def issues(self) -> list[str]:
        out = []
        if not self.intensity_ok:
            out.append(f"source intensity {self.source_intensity} != 1")
        for v in self.conservation_violations:
            out.append(f"vertex {v:#x} leaks {self.conservation[v]}")
        for v in self.negative_absorption:
            out.append(f"accepting vertex {v:#x} emits {-self.absorption[v]}")
        for a in self.zero_weight_violations:
            out.append(f"flow on zero-weight arc {a}")
        return out


def validate_flow(
    G: LearningGraph, w: Weight, x: Sequence[int], p: Flow, f: FunctionSpec, tol: float = DEFAULT_TOL
) -> FlowReport:
    """Report-style check of the flow axioms on ``G(x)``.

    Residuals are keyed by vertex mask: inflow minus outflow for
    non-accepting vertices other than the root, net absorption for
    accepting ones.
    """
    wx = realize(G, w, x, exact=p.exact)
    acc = G.accepting(f, x)
    net = [0] * len(G.vertices)  # inflow - outflow
    for arc in G.arcs:
        val = p.values[arc.id]
        if val == 0:
            continue
        net[G.arc_tail[arc.id]] -= val
        net[G.arc_head[arc.id]] += val
    report = FlowReport(source_intensity=float(-net[G.root]), tol=tol)
    for idx, mask in enumerate(G.vertices):
        if idx == G.root:
            continue
        if acc[idx]:
            report.absorption[mask] = float(net[idx])
        else:
            report.conservation[mask] = float(net[idx])
    report.zero_weight_violations = [i for i in range(len(G.arcs)) if p.values[i] != 0 and wx[i] == 0]
    return report


def _component(G: LearningGraph, positive: np.ndarray) -> np.ndarray:
    """Vertices connected to the root through positive-weight arcs (undirected)."""
    nv = len(G.vertices)
    tails, heads = G.arc_tail[positive], G.arc_head[positive]
    adj = sp.coo_matrix((np.ones(len(tails)), (tails, heads)), shape=(nv, nv)).tocsr()
    _, labels = connected_components(adj, directed=False)
    return labels == labels[G.root]


def optimal_flow(
    G: LearningGraph,
    w: Weight,
    x: Sequence[int],
    f: FunctionSpec,
    exact: bool = False,
    tol: float = DEFAULT_TOL,
) -> Flow:
    """Minimum-cost unit flow from the root into the accepting set.

    Zero-weight arcs are removed, every accepting vertex is merged into one
    sink, and arcs become conductors of conductance ``w_e(x)``; the flow is
    read off the potentials of the unit source/sink problem.
    """
    wx = realize(G, w, x, exact=exact)
    acc = G.accepting(f, x)
    if acc[G.root]:
        raise DegenerateInstanceError(f"root is accepting for input {format_input(x)}")
    positive = np.array([v > 0 for v in wx], dtype=bool)
    comp = _component(G, positive)
    if not (acc & comp).any():
        raise InfeasibleError(f"no accepting vertex reachable for input {format_input(x)}")

    # node numbering: merged sink is dropped (grounded); others get 0..k-1
    node = np.full(len(G.vertices), -1, dtype=np.int64)
    free = np.flatnonzero(comp & ~acc)
    node[free] = np.arange(len(free))
    sink = -2
    node[comp & acc] = sink
    arcs = np.flatnonzero(positive & comp[G.arc_tail])
    tails, heads = node[G.arc_tail[arcs]], node[G.arc_head[arcs]]
    k = len(free)
    rhs_index = node[G.root]

    if exact:
        lap = [[Fraction(0)] * k for _ in range(k)]
        for a, u, v in zip(arcs, tails, heads):
            c = wx[a]
            if u >= 0:
                lap[u][u] += c
            if v >= 0:
                lap[v][v] += c
            if u >= 0 and v >= 0:
                lap[u][v] -= c
                lap[v][u] -= c
        rhs = [Fraction(0)] * k
        rhs[rhs_index] = Fraction(1)
        phi = solve_fraction(lap, rhs)
        values = [Fraction(0)] * len(G.arcs)
        for a, u, v in zip(arcs, tails, heads):
            pu = phi[u] if u >= 0 else 0
            pv = phi[v] if v >= 0 else 0
            values[a] = wx[a] * (pu - pv)
        return Flow(tuple(x), values)

    c = wx[arcs]
    both = (tails >= 0) & (heads >= 0)
    diag = np.zeros(k)
    np.add.at(diag, tails[tails >= 0], c[tails >= 0])
    np.add.at(diag, heads[heads >= 0], c[heads >= 0])
    rhs = np.zeros(k)
    rhs[rhs_index] = 1.0
    if k <= DENSE_LIMIT:
        lap = np.diag(diag)
        np.add.at(lap, (tails[both], heads[both]), -c[both])
        np.add.at(lap, (heads[both], tails[both]), -c[both])
        phi = np.linalg.solve(lap, rhs)
    else:
        off = sp.coo_matrix(
            (np.concatenate([-c[both], -c[both]]), (np.concatenate([tails[both], heads[both]]), np.concatenate([heads[both], tails[both]]))),
            shape=(k, k),
        )
        lap = (off + sp.diags(diag)).tocsr()
        precond = sp.diags(1.0 / diag)
        phi, info = spla.cg(lap, rhs, M=precond, rtol=1e-14, atol=0.0, maxiter=20 * k)
        if info != 0:
            raise InfeasibleError(f"iterative solver did not converge (info={info})")
    # negative node ids are the grounded sink
    pu = np.where(tails >= 0, phi[np.maximum(tails, 0)], 0.0)
    pv = np.where(heads >= 0, phi[np.maximum(heads, 0)], 0.0)
    values = np.zeros(len(G.arcs))
    values[arcs] = c * (pu - pv)
    return Flow(tuple(x), values)


def qp_optimal_flow(G: LearningGraph, w: Weight, x: Sequence[int], f: FunctionSpec) -> tuple[Fraction, Flow]:
    """Exact brute-force minimisation of ``sum p^2/w`` over the flow polytope.

    Solves the KKT system in arc space: one conservation row per
    non-accepting vertex (source row has right-hand side 1), absorption at
    accepting vertices left free.  Arcs outside the root's positive-weight
    component are fixed to zero, where any optimum vanishes anyway.
    Intended for graphs with a handful of arcs.
    """
    wx = realize(G, w, x, exact=True)
    acc = G.accepting(f, x)
    if acc[G.root]:
        raise DegenerateInstanceError(f"root is accepting for input {format_input(x)}")
    positive = np.array([v > 0 for v in wx], dtype=bool)
    comp = _component(G, positive)
    if not (acc & comp).any():
        raise InfeasibleError(f"no accepting vertex reachable for input {format_input(x)}")
    arcs = [int(a) for a in np.flatnonzero(positive & comp[G.arc_tail])]
    rows = [int(v) for v in np.flatnonzero(comp & ~acc)]
    row_of = {v: r for r, v in enumerate(rows)}
    na, nr = len(arcs), len(rows)
    size = na + nr
    kkt = [[Fraction(0)] * size for _ in range(size)]
    rhs = [Fraction(0)] * size
    for i, a in enumerate(arcs):
        kkt[i][i] = 2 / wx[a]
        t, h = int(G.arc_tail[a]), int(G.arc_head[a])
        # constraint row: outflow - inflow
        if t in row_of:
            kkt[i][na + row_of[t]] += 1
            kkt[na + row_of[t]][i] += 1
        if h in row_of:
            kkt[i][na + row_of[h]] -= 1
            kkt[na + row_of[h]][i] -= 1
    rhs[na + row_of[G.root]] = Fraction(1)
    sol = solve_fraction(kkt, rhs)
    values = [Fraction(0)] * len(G.arcs)
    for i, a in enumerate(arcs):
        values[a] = sol[i]
    flow = Flow(tuple(x), values)
    return _cost(wx, values, x), flow


def random_path_flow(
    G: LearningGraph,
    w: Weight,
    x: Sequence[int],
    f: FunctionSpec,
    rng: np.random.Generator,
    paths: int = 4,
) -> Flow:
    """A random nonnegative flow: a convex mix of root-to-accepting paths
    along positive-weight arcs.  Raises InfeasibleError if no path exists."""
    wx = realize(G, w, x)
    acc = G.accepting(f, x)
    # vertices from which an accepting vertex is reachable along positive arcs
    good = acc.copy()
    for idx in sorted(range(len(G.vertices)), key=lambda i: -G.vertices[i].bit_count()):
        if not good[idx]:
            good[idx] = any(wx[a] > 0 and good[G.arc_head[a]] for a in G.out_arcs[idx])
    if not good[G.root] or acc[G.root]:
        raise InfeasibleError(f"no directed path to an accepting vertex for {format_input(x)}")
    mix = rng.dirichlet(np.ones(paths))
    values = np.zeros(len(G.arcs))
    for share in mix:
        v = G.root
        while not acc[v]:
            choices = [a for a in G.out_arcs[v] if wx[a] > 0 and good[G.arc_head[a]]]
            a = choices[rng.integers(len(choices))]
            values[a] += share
            v = G.arc_head[a]
    return Flow(tuple(x), values)


def condition_flow(G: LearningGraph, p: Flow, V: Sequence[int], W: Sequence[int], tol: float = DEFAULT_TOL) -> Flow:
    """Condition a nonnegative flow ending at the antichain ``V`` onto ``W``.

    Each arc keeps the share of its flow that eventually reaches ``W``,
    rescaled by ``1/t`` where ``t`` is the flow into ``W``.  Pointwise
    ``p'_e <= p_e / t``, hence ``cost(p') <= cost(p) / t^2``.
    """
    V = list(V)
    Wset = set(W)
    if not Wset <= set(V):
        raise InputError("W must be a subset of V")
    if not G.is_antichain(V):
        raise InputError("V is not an antichain")
    if any(v < 0 for v in p.values):
        raise InputError("conditioning needs a nonnegative flow")
    Vset = set(V)
    nv = len(G.vertices)
    inflow = [0] * nv
    outflow = [0] * nv
    for arc in G.arcs:
        val = p.values[arc.id]
        if val:
            outflow[G.arc_tail[arc.id]] += val
            inflow[G.arc_head[arc.id]] += val
    for idx, mask in enumerate(G.vertices):
        if mask in Vset:
            if abs(outflow[idx]) > tol:
                raise InputError(f"flow continues past V at vertex {mask:#x}")
        elif idx != G.root and abs(inflow[idx] - outflow[idx]) > tol:
            raise InputError(f"flow does not end at V: vertex {mask:#x} leaks")
    t = sum(inflow[G.vertex_index[v]] for v in Wset if v in G.vertex_index)
    if t <= 0:
        raise ConditioningError("no flow reaches W")
    share = [0] * nv
    for idx in sorted(range(nv), key=lambda i: -G.vertices[i].bit_count()):
        mask = G.vertices[idx]
        if mask in Vset:
            share[idx] = 1 if mask in Wset else 0
        elif outflow[idx]:
            share[idx] = sum(p.values[a] * share[G.arc_head[a]] for a in G.out_arcs[idx]) / outflow[idx]
    if p.exact:
        values = [p.values[a.id] * share[G.arc_head[a.id]] / t for a in G.arcs]
    else:
        values = np.array([p.values[a.id] * share[G.arc_head[a.id]] / t for a in G.arcs], dtype=float)
    return Flow(p.x, values)
