"""Arc classings, symmetrisation under the symmetry group of a function,
flow transport, and class-level weighting with specialities."""

from __future__ import annotations

import itertools
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .domain import DEFAULT_ENUMERATION_CAP, FunctionSpec, InputPoint, SymmetryElement, enumerate_inputs, evaluate, restrict
from .errors import InputError, ResourceCapError, TransportUnsoundError
from .flows import Flow
from .graph import Arc, LearningGraph, TableWeights, Weight, indices_of, realize

GROUP_CAP = 100_000


# --- specifications and types ----------------------------------------------


@dataclass(frozen=True)
class Specification:
    """Counts ``(b_1, ..., b_{k-1})`` of maximal equal-value groups by size.

    ``accepting`` is set when some group has ``k`` or more members; the
    counts then only cover the groups smaller than ``k``.
    """

    b: tuple[int, ...]
    accepting: bool = False

    @property
    def size(self) -> int:
        return sum(t * c for t, c in enumerate(self.b, start=1))

    def __str__(self) -> str:
        body = "(" + ",".join(map(str, self.b)) + ")"
        return body + "!" if self.accepting else body


def spec_of_values(values: Iterable[int], k: int) -> Specification:
    b = [0] * (k - 1)
    accepting = False
    for cnt in Counter(values).values():
        if cnt >= k:
            accepting = True
        else:
            b[cnt - 1] += 1
    return Specification(tuple(b), accepting)


def specification_of(S: Iterable[int], x: Sequence[int], k: int) -> Specification:
    """Specification of the index set ``S`` (0-based) under ``x``."""
    if k < 2:
        raise InputError("k must be at least 2")
    return spec_of_values((x[i] for i in S), k)


@dataclass(frozen=True)
class Layout:
    """Promised blocks: ``tuples[s-1]`` lists the index groups of ``A_s``
    (``s = 1..k-1``); ``marked`` is ``M``; other indices are slack."""

    k: int
    tuples: tuple[tuple[tuple[int, ...], ...], ...]
    marked: tuple[int, ...] = ()

    def block_map(self) -> dict[int, int]:
        out = {}
        for s, groups in enumerate(self.tuples, start=1):
            for g in groups:
                for i in g:
                    out[i] = s
        for i in self.marked:
            out[i] = self.k
        return out

    @property
    def ell(self) -> tuple[int, ...]:
        return tuple(len(g) for g in self.tuples)

    @property
    def support(self) -> tuple[int, ...]:
        """``A_{>=1}`` as a sorted tuple."""
        return tuple(sorted(i for groups in self.tuples for g in groups for i in g))


@dataclass(frozen=True)
class TypeMatrix:
    """``b[t-1][s-1]``: number of ``t``-subtuples inside block ``s``
    (column ``k`` is ``M``)."""

    b: tuple[tuple[int, ...], ...]

    @property
    def spec(self) -> Specification:
        return Specification(tuple(sum(row) for row in self.b))

    def column_usage(self) -> tuple[int, ...]:
        """``z_s = sum_t b_{t,s}``: tuples of each block already touched."""
        return tuple(sum(row[s] for row in self.b) for s in range(len(self.b[0])))

    def as_array(self) -> np.ndarray:
        return np.array(self.b, dtype=np.int64)


def type_of(S: Iterable[int], x: Sequence[int], layout: Layout, k: int | None = None) -> TypeMatrix | None:
    """Type matrix of ``S``; ``None`` when ``S`` touches a slack index or
    holds ``k`` equal values (no flow passes such vertices)."""
    k = k or layout.k
    blocks = layout.block_map()
    groups: dict[int, list[int]] = defaultdict(list)
    for i in S:
        if i not in blocks:
            return None
        groups[x[i]].append(i)
    b = [[0] * k for _ in range(k - 1)]
    for members in groups.values():
        t = len(members)
        if t >= k:
            return None
        b[t - 1][blocks[members[0]] - 1] += 1
    return TypeMatrix(tuple(map(tuple, b)))


def type_distance(T1: TypeMatrix, T2: TypeMatrix) -> int:
    a, b = T1.as_array(), T2.as_array()
    if a.shape != b.shape:
        raise InputError(f"type shapes {a.shape} and {b.shape} differ")
    return int(np.abs(a - b).max(initial=0))


def class_key(arc: Arc, x: Sequence[int], mode: str = "bySize", k: int = 2) -> Hashable:
    if mode == "bySize":
        return arc.size
    if mode == "bySpecification":
        return specification_of(arc.indices, x, k)
    raise InputError(f"unknown classing mode {mode!r}")


class SpecClassWeights:
    """Weight keyed by ``(|S|, specification of x_S)``; accepting origins
    and unlisted classes get ``default``."""

    def __init__(self, k: int, table: Mapping[tuple[int, tuple[int, ...]], float], default=0):
        self.k = k
        self.table = dict(table)
        self.default = default

    def __call__(self, arc: Arc, alpha: tuple[int, ...]):
        spec = spec_of_values(alpha, self.k)
        if spec.accepting:
            return self.default
        return self.table.get((len(alpha), spec.b), self.default)


# --- the symmetry group and averaging --------------------------------------


def symmetry_group(f: FunctionSpec, cap: int = GROUP_CAP, input_cap: int = DEFAULT_ENUMERATION_CAP) -> list[SymmetryElement]:
    """All of ``S_n x S_m`` that preserves ``f``."""
    size = math.factorial(f.n) * math.factorial(f.m)
    if size > cap:
        raise ResourceCapError(f"group of order {size} exceeds the cap {cap}")
    full = [
        SymmetryElement(ip, vp)
        for ip in itertools.permutations(range(f.n))
        for vp in itertools.permutations(range(1, f.m + 1))
    ]
    if f.symmetric:
        return full
    inputs = list(enumerate_inputs(f, "all", cap=input_cap))
    values = {x: evaluate(f, x) for x in inputs}
    return [s for s in full if all(values[s.apply(x)] == v for x, v in values.items())]


def sample_group(f: FunctionSpec, size: int, seed: int, input_cap: int = DEFAULT_ENUMERATION_CAP) -> list[SymmetryElement]:
    """``size`` seeded uniform elements of ``S_n x S_m`` that preserve ``f``
    (always including the identity)."""
    rng = np.random.Generator(np.random.Philox(seed))
    inputs = None if f.symmetric else list(enumerate_inputs(f, "all", cap=input_cap))
    out = [SymmetryElement.identity(f.n, f.m)]
    tries = 0
    while len(out) < size:
        tries += 1
        if tries > 1000 * size:
            break
        s = SymmetryElement(tuple(int(i) for i in rng.permutation(f.n)), tuple(int(v) + 1 for v in rng.permutation(f.m)))
        if inputs is None or all(evaluate(f, s.apply(x)) == evaluate(f, x) for x in inputs):
            out.append(s)
    return out


def map_arc(G: LearningGraph, sigma: SymmetryElement, arc: Arc) -> Arc:
    """The arc ``sigma e``, which reads ``(sigma x)`` where ``e`` reads ``x``."""
    key = (sigma.map_mask(arc.origin), sigma.index(arc.loaded))
    if key not in G.arc_index:
        raise InputError("graph is not closed under the index permutation")
    return G.arcs[G.arc_index[key]]


def _arc_maps(G: LearningGraph, group: Sequence[SymmetryElement]) -> list[list[int]]:
    if not G.closed_under_index_permutations():
        raise InputError("symmetrisation needs a graph closed under index permutations")
    return [[map_arc(G, s, a).id for a in G.arcs] for s in group]


def symmetrize(
    G: LearningGraph,
    w: Weight,
    flows: Mapping[InputPoint, Flow],
    f: FunctionSpec,
    group: str | Sequence[SymmetryElement] = "full",
    samples: int = 64,
    seed: int = 0,
    cap: int = GROUP_CAP,
    inputs: Iterable[Sequence[int]] | None = None,
) -> tuple[TableWeights, dict[InputPoint, Flow]]:
    """Average weights and flows over a group of symmetries of ``f``.

    ``w'_e(x) = avg_s w_{se}(sx)`` and ``p'_e(x) = avg_s p_{se}(sx)``.  With
    the full group the result is invariant and, by convexity of
    ``p^2/w``, no worse than the input.  ``flows`` must cover every
    positive input the group reaches.
    """
    if group == "full":
        elems = symmetry_group(f, cap=cap)
    elif group == "sampled":
        elems = sample_group(f, samples, seed)
    else:
        elems = list(group)
    maps = _arc_maps(G, elems)
    exact = any(p.exact for p in flows.values())
    inputs = [tuple(x) for x in (inputs if inputs is not None else enumerate_inputs(f, "all"))]
    count = len(elems)
    zero = Fraction(0) if exact else 0.0
    table = {}
    for x in inputs:
        images = [s.apply(x) for s in elems]
        wimg = [realize(G, w, sx, exact=exact) for sx in images]
        for arc in G.arcs:
            key = (arc.id, restrict(x, arc.indices))
            if key in table:
                continue
            total = sum((wimg[g][maps[g][arc.id]] for g in range(count)), zero)
            table[key] = total / count
    new_flows = {}
    for x in flows:
        images = [s.apply(x) for s in elems]
        missing = [sx for sx in images if sx not in flows]
        if missing:
            raise InputError(f"no flow for the image input {missing[0]}")
        vals = [sum((flows[sx].values[maps[g][a]] for g, sx in enumerate(images)), zero) / count for a in range(len(G.arcs))]
        new_flows[x] = Flow(x, vals if exact else np.array(vals, dtype=float))
    return TableWeights(table), new_flows


def transport_flow(
    G: LearningGraph,
    w: Weight,
    sigma: SymmetryElement,
    p: Flow,
    tol: float = 1e-12,
) -> Flow:
    """Move the flow for ``x`` onto ``sigma x``: arc ``e`` hands its value to
    ``sigma e``.  Cost is preserved when ``w_{se}(sx) = w_e(x)`` everywhere,
    which is checked."""
    x = p.x
    sx = sigma.apply(x)
    wx = realize(G, w, x, exact=p.exact)
    wsx = realize(G, w, sx, exact=p.exact)
    values = [Fraction(0)] * len(G.arcs) if p.exact else np.zeros(len(G.arcs))
    for arc in G.arcs:
        target = map_arc(G, sigma, arc).id
        if abs(wsx[target] - wx[arc.id]) > (0 if p.exact else tol):
            raise TransportUnsoundError(f"weight of arc {arc.id} changes under the symmetry")
        values[target] = p.values[arc.id]
    return Flow(sx, values)


# --- class statistics -------------------------------------------------------


@dataclass
class ClassStats:
    key: Hashable
    pi: float
    tau: float
    mu: float
    count: int = 0
    step: int | None = None

    def __post_init__(self):
        if self.pi < 0 or self.tau < 0 or self.mu < 0:
            raise InputError(f"class {self.key}: pi, tau and mu must be nonnegative")


@dataclass
class ClassWeighting:
    weights: dict[Hashable, float]
    estimate: float
    step_bound: float
    rows: list[ClassStats] = field(default_factory=list, repr=False)


def weight_from_class_stats(stats: Sequence[ClassStats]) -> ClassWeighting:
    """Weight ``pi/sqrt(tau)`` per class, the estimate ``sum mu sqrt(tau)``
    and the per-step bound ``sum_i sqrt(T_i)`` (``T_i`` the largest
    speciality on step ``i``; classes without a step form their own step)."""
    weights = {}
    estimate = 0.0
    worst: dict[Hashable, float] = {}
    for st in stats:
        if st.tau <= 0:
            raise InputError(f"class {st.key} has speciality {st.tau}")
        weights[st.key] = st.pi / math.sqrt(st.tau)
        estimate += st.mu * math.sqrt(st.tau)
        step = st.step if st.step is not None else ("class", st.key)
        worst[step] = max(worst.get(step, 0.0), float(st.tau))
    return ClassWeighting(weights, estimate, sum(math.sqrt(t) for t in worst.values()), list(stats))


def measure_class_stats(
    G: LearningGraph,
    flows: Mapping[InputPoint, Flow],
    negatives: Iterable[Sequence[int]],
    key,
) -> list[ClassStats]:
    """Empirical class statistics of a flow family.

    ``key(arc, x)`` names the class of an arc on input ``x`` (``None`` for
    arcs that never carry weight).  Typical arcs are those with nonzero
    flow; ``pi`` is their mean flow, ``tau`` the ratio of the largest
    negative class size to the largest typical count, ``mu = pi * |G|``.
    """
    neg_size: dict[Hashable, int] = defaultdict(int)
    for y in negatives:
        sizes = Counter(key(arc, y) for arc in G.arcs)
        for k_, c in sizes.items():
            if k_ is not None:
                neg_size[k_] = max(neg_size[k_], c)
    used: dict[Hashable, int] = defaultdict(int)
    total: dict[Hashable, Fraction] = defaultdict(Fraction)
    for x, p in flows.items():
        seen: dict[Hashable, int] = Counter()
        mass: dict[Hashable, Fraction] = defaultdict(Fraction)
        for a in p.support():
            k_ = key(G.arcs[a], x)
            if k_ is None:
                raise InputError(f"flow of {x} uses an unclassed arc {a}")
            seen[k_] += 1
            mass[k_] += abs(Fraction(p.values[a]))
        for k_, c in seen.items():
            if c > used[k_]:
                used[k_] = c
                total[k_] = mass[k_]
    out = []
    for k_, c in used.items():
        pi = total[k_] / c
        size = max(neg_size.get(k_, 0), c)
        step = k_[0] if isinstance(k_, tuple) else k_
        out.append(ClassStats(k_, pi, Fraction(size, c), pi * c, count=size, step=step))
    return out
