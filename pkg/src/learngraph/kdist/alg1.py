"""The staged k-distinctness learning graph.

Two realisations: ``build_alg1_tiny`` enumerates the full subset lattice
and builds the explicit flow of the promised positive input, and
``alg1_collapsed`` works at the level of step classes only.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from ..errors import ConstructionError, InputError, SamplerError
from ..flows import Flow, condition_flow
from ..graph import Arc, LearningGraph, build_layered_graph, mask_of
from ..symmetry import ClassStats, SpecClassWeights, TypeMatrix, measure_class_stats, spec_of_values, type_of
from .baseline import CollapsedEstimate, CollapsedRow
from .counting import count_by_specification, expected_subtuples, key_flow_factor
from .flowbuild import FlowBuilder
from .params import D_function, StageParams, StepLabel, is_original_valid, spec_shift, step_schedule
from .promise import PromisedInstance


# --- explicit construction --------------------------------------------------


def _stage_rounds(params: StageParams, i: int) -> int:
    return params.r[i - 1] - 1 if i == params.k - 1 else params.r[i - 1]


def _fresh_subtuples(inst: PromisedInstance, S: int, i: int):
    """All ``(s, subtuple)`` with the subtuple an ``i``-subset of an
    ``s``-tuple (``s >= i``) that ``S`` does not touch."""
    for s in range(i, inst.k):
        for g in inst.layout.tuples[s - 1]:
            if not S & mask_of(g):
                for sub in itertools.combinations(g, i):
                    yield s, sub


def alg1_flow(G: LearningGraph, params: StageParams, inst: PromisedInstance) -> tuple[Flow, dict[int, Fraction]]:
    """Flow of the promised positive input and the flows of the key vertices
    just before the last stage."""
    x = inst.positive
    fb = FlowBuilder(G, x)
    F = params.first_stage_length
    ends = fb.uniform_stage(inst.support, F)
    if params.k >= 3:
        valid = [S for S in ends if is_original_valid(params, spec_of_values((x[i] for i in _members(S)), params.k).b)]
        if not valid:
            raise ConstructionError("every first-stage vertex is a dead-end")
        first = fb.flow()
        cond = condition_flow(G, first, list(ends), valid)
        fb.values.clear()
        for a, v in enumerate(cond.values):
            if v:
                fb.values[a] = v
        t = Fraction(len(valid), len(ends))
        keys = {S: ends[S] / t for S in valid}
    else:
        keys = dict(ends)
    for i in range(2, params.k):
        for _ in range(_stage_rounds(params, i)):
            nxt: dict[int, Fraction] = {}
            for S, p in keys.items():
                T = type_of(_members(S), x, inst.layout)
                N = D_function(params.ell, i, T.column_usage()[: params.k - 1])
                if N == 0:
                    raise ConstructionError("a key vertex has no succeeding key vertex; the promise is too tight for these round sizes")
                choices = list(_fresh_subtuples(inst, S, i))
                if len(choices) != N:
                    raise ConstructionError(f"successor count {len(choices)} disagrees with D = {N}")
                for _, sub in choices:
                    target = fb.all_orders(S, sub, p / N)
                    nxt[target] = nxt.get(target, Fraction(0)) + p / N
            keys = nxt
    for S, p in keys.items():
        fb.all_orders(S, inst.marked, p)
    return fb.flow(), keys


def _members(mask: int) -> tuple[int, ...]:
    return tuple(i for i in range(mask.bit_length()) if mask >> i & 1)


def spec_class_key(k: int):
    def key(arc: Arc, x) -> tuple[int, tuple[int, ...]] | None:
        spec = spec_of_values((x[i] for i in arc.indices), k)
        return None if spec.accepting else (arc.size, spec.b)

    return key


@dataclass
class Alg1Tiny:
    params: StageParams
    instance: PromisedInstance
    graph: LearningGraph
    weights: SpecClassWeights
    flow: Flow = field(repr=False)
    stats: list[ClassStats] = field(repr=False)
    last_keys: dict[int, Fraction] = field(repr=False)

    @property
    def flows(self) -> dict:
        return {self.instance.positive: self.flow}


def build_alg1_tiny(params: StageParams, inst: PromisedInstance, cap: int = 2_000_000) -> Alg1Tiny:
    """Full-lattice graph with weights ``pi/sqrt(tau)`` per ``(|S|, spec)``
    class, measured on the promised positive and negative inputs; classes
    the flow never uses get weight 0."""
    if (params.k, params.n, params.ell) != (inst.k, inst.n, inst.ell):
        raise InputError("parameters and instance disagree")
    G = build_layered_graph(params.n, params.depth, cap=cap)
    flow, keys = alg1_flow(G, params, inst)
    key = spec_class_key(params.k)
    stats = measure_class_stats(G, {inst.positive: flow}, [inst.negative], key)
    table = {st.key: Fraction(float(st.pi) / math.sqrt(st.tau)) for st in stats}
    return Alg1Tiny(params, inst, G, SpecClassWeights(params.k, table), flow, stats, keys)


# --- key-vertex flows -------------------------------------------------------


def key_added(params: StageParams, i: int, j: int) -> tuple[int, ...]:
    """Fresh subtuples per level loaded before the key vertex of round ``j``
    of stage ``i`` (``i = k`` means the start of the last stage)."""
    added = [0] * (params.k - 1)
    for t in range(2, min(i, params.k)):
        added[t - 1] = params.r[t - 1]
    if i < params.k:
        added[i - 1] = j - 1
    else:
        added[params.k - 2] = params.r[params.k - 2] - 1
    return tuple(added)


def key_vertex_flow(params: StageParams, T: TypeMatrix, i: int, j: int, p_o: Fraction = Fraction(1)) -> Fraction:
    """Exact flow of a key vertex of type ``T`` before round ``j`` of stage ``i``."""
    return p_o * key_flow_factor(params.ell, T.b, key_added(params, i, j))


def first_stage_flow(params: StageParams) -> Fraction:
    """``p_o``: the common flow of surviving first-stage vertices."""
    if params.k < 3:
        return Fraction(1, comb(params.support_size, params.first_stage_length))
    valid = sum(count_by_specification(params.ell, b) for b in _original_specs(params))
    if valid == 0:
        raise ConstructionError("no first-stage vertex survives the dead-end caps")
    return Fraction(1, valid)


def _original_specs(params: StageParams):
    k1 = params.k - 1
    r1 = params.r[0]

    def rec(t: int, left: int):
        if t == 1:
            yield (left,)
            return
        top = min(left // t, math.floor(params.cap(t)))
        for c in range(top + 1):
            for rest in rec(t - 1, left - c * t):
                yield rest + (c,)

    yield from rec(k1, r1)


# --- path sampling ----------------------------------------------------------


class KeyVertexSampler:
    """Draws key vertices with probability equal to their flow: a uniform
    surviving first-stage vertex followed by uniform successor choices."""

    def __init__(self, params: StageParams, inst: PromisedInstance):
        self.params = params
        self.inst = inst
        self.support = np.array(inst.support)
        tuple_of = inst.tuple_of()
        self.tuple_id = {}
        for tid, g in enumerate(sorted(set(tuple_of.values()))):
            for i in g:
                self.tuple_id[i] = tid

    def first_stage(self, rng: np.random.Generator, max_tries: int = 100_000) -> frozenset[int]:
        x = self.inst.positive
        for _ in range(max_tries):
            S = frozenset(int(i) for i in rng.choice(self.support, self.params.first_stage_length, replace=False))
            if self.params.k < 3 or is_original_valid(self.params, spec_of_values((x[i] for i in S), self.params.k).b):
                return S
        raise SamplerError("first-stage rejection sampling exceeded its budget")

    def sample(self, rng: np.random.Generator, i: int, j: int) -> frozenset[int]:
        S = set(self.first_stage(rng))
        touched = {self.tuple_id[v] for v in S}
        for stage in range(2, self.params.k):
            rounds = key_added(self.params, i, j)[stage - 1]
            for _ in range(rounds):
                options = []
                weights = []
                for s in range(stage, self.params.k):
                    free = [g for g in self.inst.layout.tuples[s - 1] if self.tuple_id[g[0]] not in touched]
                    options.append(free)
                    weights.append(len(free) * comb(s, stage))
                total = sum(weights)
                if total == 0:
                    raise ConstructionError("a key vertex has no succeeding key vertex")
                pick = rng.integers(total)
                for free, wgt, s in zip(options, weights, range(stage, self.params.k)):
                    if pick < wgt:
                        g = free[pick // comb(s, stage)]
                        sub = rng.choice(len(g), stage, replace=False)
                        S.update(g[int(q)] for q in sub)
                        touched.add(self.tuple_id[g[0]])
                        break
                    pick -= wgt
        return frozenset(S)


# --- class-collapsed estimate ----------------------------------------------


def step_speciality(params: StageParams, step: StepLabel) -> Fraction:
    """Table-style speciality: 1 on the first stage, ``n/r_{l-1}`` on a
    preparatory step of level ``l`` and ``n^2/r_{j-1}`` on step ``j`` of the
    last stage (``r_0 = n``)."""
    r = (params.n,) + params.r
    if step.kind == "first":
        return Fraction(1)
    if step.kind == "prep":
        return Fraction(params.n, r[step.l - 1])
    return Fraction(params.n**2, r[step.j - 1])


def typical_original_spec(params: StageParams) -> tuple[int, ...]:
    """Rounded mean specification of an ``r_1``-subset, clipped to the caps."""
    k1 = params.k - 1
    b = [0] * k1
    for t in range(2, params.k):
        b[t - 1] = min(round(float(expected_subtuples(params.ell, params.r[0], t))), math.floor(params.cap(t)))
    b[0] = params.r[0] - sum(t * c for t, c in enumerate(b, start=1) if t >= 2)
    return tuple(b)


def alg1_collapsed(params: StageParams, sizes: bool = False) -> CollapsedEstimate:
    """Per-step rows and the estimate ``sum_i sqrt(T_i)``.

    ``sizes`` fills the class-size column with the exact number of subsets
    of ``A_{>=1}`` carrying the typical specification of each step; it is
    off by default because it costs a counting sum per step.
    """
    rows = []
    orig = typical_original_spec(params)
    for d, step in enumerate(step_schedule(params)):
        size = 0
        if sizes:
            if step.kind == "first":
                size = comb(params.support_size, d)
            else:
                spec = tuple(a + b for a, b in zip(orig, spec_shift(params, step)))
                size = count_by_specification(params.ell, spec)
        rows.append(CollapsedRow(d + 1, str(step), size, step_speciality(params, step)))
    est = sum(r.sqrt_t for r in rows)
    # the table estimate doubles as N = P so that C reports it
    return CollapsedEstimate(rows, est, est)


def default_promise(k: int, n: int) -> tuple[int, ...]:
    """Equal share of the indices for every level, leaving room for ``k``
    marked ones."""
    room = n - k
    per = room // (k - 1)
    return tuple(max(1, per // t) for t in range(1, k))
