"""Compile a weighted learning graph and its flows into a feasible solution
of the dual adversary program and verify it.

Every coordinate is stored as ``coef * sqrt(radicand)`` so the exact path
can multiply matching coordinates without irrational arithmetic: a
negative input gets ``1 * sqrt(w)``, a positive one ``(p/w) * sqrt(w)``, and
their product on a shared key is ``p`` exactly.  A coordinate is keyed by
the arc alone; its assignment part is implicitly the owner's ``x_S``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .domain import FunctionSpec, InputPoint, enumerate_inputs, evaluate, format_input, is_accepting_assignment, restrict
from .errors import InfeasibleError, InputError
from .flows import Flow
from .graph import LearningGraph, Weight, indices_of, realize

Coord = tuple  # (coef, radicand)


@dataclass
class DualVector:
    owner: InputPoint
    index: int
    entries: dict[int, float]

    def norm2(self) -> float:
        return sum(v * v for v in self.entries.values())


@dataclass
class CertificateBundle:
    f: FunctionSpec
    graph: LearningGraph
    positive: dict[InputPoint, dict[int, Coord]] = field(default_factory=dict)
    negative: dict[InputPoint, dict[int, Coord]] = field(default_factory=dict)
    exact: bool = False

    def coords(self, x: InputPoint) -> dict[int, Coord]:
        return self.positive[x] if x in self.positive else self.negative[x]

    def vector(self, x: InputPoint, j: int) -> DualVector:
        entries = {
            a: _value(c) for a, c in self.coords(x).items() if self.graph.arcs[a].loaded == j
        }
        return DualVector(x, j, entries)

    def side_norm2(self, x: InputPoint):
        """``sum_j ||u_{x,j}||^2``."""
        zero = Fraction(0) if self.exact else 0.0
        return sum((c * c * r for c, r in self.coords(x).values()), zero)

    @property
    def positive_max(self):
        return max((self.side_norm2(x) for x in self.positive), default=0)

    @property
    def negative_max(self):
        return max((self.side_norm2(y) for y in self.negative), default=0)

    @property
    def objective(self) -> float:
        return objective_value(self)


def _value(c: Coord) -> float:
    return float(c[0]) * math.sqrt(float(c[1]))


def build_certificate(
    G: LearningGraph,
    w: Weight,
    flows: Mapping[InputPoint, Flow],
    f: FunctionSpec,
    negatives: Iterable[Sequence[int]] | None = None,
    exact: bool = False,
) -> CertificateBundle:
    """Negative inputs get ``sqrt(w_e(y))`` on every arc, positive inputs
    ``p_e(x)/sqrt(w_e(x))`` (``0/0 = 0``)."""
    bundle = CertificateBundle(f=f, graph=G, exact=exact)
    zero = Fraction(0) if exact else 0.0
    for x, p in flows.items():
        if evaluate(f, x) != 1:
            raise InputError(f"flow supplied for negative input {format_input(x)}")
        wx = realize(G, w, x, exact=exact)
        coords = {}
        for a in range(len(G.arcs)):
            val = Fraction(p.values[a]) if exact else float(p.values[a])
            if val == 0:
                continue
            if wx[a] == 0:
                raise InfeasibleError(f"input {format_input(x)} sends {val} through zero-weight arc {a}")
            coords[a] = (val / wx[a], wx[a])
        bundle.positive[tuple(x)] = coords
    if negatives is None:
        negatives = enumerate_inputs(f, "negative")
    for y in negatives:
        y = tuple(y)
        if evaluate(f, y) != 0:
            raise InputError(f"{format_input(y)} is not a negative input")
        wy = realize(G, w, y, exact=exact)
        bundle.negative[y] = {a: (zero + 1, wy[a]) for a in range(len(G.arcs)) if wy[a] != 0}
    return bundle


def objective_value(bundle: CertificateBundle) -> float:
    return math.sqrt(float(bundle.positive_max) * float(bundle.negative_max))


def rescale_balance(bundle: CertificateBundle, c) -> CertificateBundle:
    """Scale positive vectors by ``c`` and negative ones by ``1/c``."""
    if c <= 0:
        raise InputError("rescaling constant must be positive")
    if bundle.exact:
        c = Fraction(c)
    inv = 1 / c
    return CertificateBundle(
        f=bundle.f,
        graph=bundle.graph,
        positive={x: {a: (k * c, r) for a, (k, r) in cs.items()} for x, cs in bundle.positive.items()},
        negative={y: {a: (k * inv, r) for a, (k, r) in cs.items()} for y, cs in bundle.negative.items()},
        exact=bundle.exact,
    )


def balancing_constant(bundle: CertificateBundle) -> float:
    """The ``c`` that equalises both side maxima: ``(max0 / max1) ** (1/4)``."""
    return (float(bundle.negative_max) / float(bundle.positive_max)) ** 0.25


def _product(cx: Coord, cy: Coord):
    if cx[1] == cy[1]:
        return cx[0] * cy[0] * cx[1]
    return float(cx[0]) * float(cy[0]) * math.sqrt(float(cx[1]) * float(cy[1]))


def agreement_mask(x: Sequence[int], y: Sequence[int]) -> int:
    out = 0
    for i, (a, b) in enumerate(zip(x, y)):
        if a == b:
            out |= 1 << i
    return out


def pair_sum(bundle: CertificateBundle, x: InputPoint, y: InputPoint):
    """``sum_{j: x_j != y_j} <u_{x,j}, u_{y,j}>``; only coordinates whose
    origin assignments agree (``x_S = y_S``) meet."""
    agree = agreement_mask(x, y)
    cx, cy = bundle.coords(x), bundle.coords(y)
    arcs = bundle.graph.arcs
    total = Fraction(0) if bundle.exact else 0.0
    small, other = (cx, cy) if len(cx) <= len(cy) else (cy, cx)
    for a, c in small.items():
        arc = arcs[a]
        if arc.origin & ~agree or agree >> arc.loaded & 1:
            continue
        d = other.get(a)
        if d is not None:
            total += _product(c, d)
    return total


@dataclass
class FeasibilityReport:
    max_deviation: float = 0.0
    worst_pair: tuple | None = None
    pairs: int = 0
    exact_ok: bool | None = None
    rows: list[tuple[str, str, str, str]] = field(default_factory=list, repr=False)

    def ok(self, tol: float = 1e-9) -> bool:
        return self.pairs > 0 and self.max_deviation <= tol

    def record(self, xs: str, ys: str, s, keep_rows: bool):
        dev = abs(float(s) - 1.0)
        if isinstance(s, Fraction):
            self.exact_ok = (self.exact_ok is not False) and s == 1
        if dev > self.max_deviation or self.worst_pair is None:
            self.max_deviation = max(dev, self.max_deviation)
            if dev >= self.max_deviation:
                self.worst_pair = (xs, ys)
        self.pairs += 1
        if keep_rows:
            self.rows.append((xs, ys, str(s), repr(dev)))

    def csv(self) -> str:
        lines = ["x,y,sum,deviation"]
        lines += [",".join(f'"{c}"' if "," in c else c for c in row) for row in self.rows]
        return "\n".join(lines) + "\n"


def verify_feasibility(bundle: CertificateBundle, f: FunctionSpec | None = None, keep_rows: bool = True) -> FeasibilityReport:
    """Check the constraint on every pair with ``f(x) != f(y)`` in the bundle."""
    f = f or bundle.f
    report = FeasibilityReport()
    for x in bundle.positive:
        for y in bundle.negative:
            if evaluate(f, x) == evaluate(f, y):
                continue
            report.record(format_input(x), format_input(y), pair_sum(bundle, x, y), keep_rows)
    return report


def verify_agreement_classes(
    bundle: CertificateBundle,
    w: Weight,
    positives: Iterable[InputPoint] | None = None,
    keep_rows: bool = False,
) -> FeasibilityReport:
    """Verify the constraint against every negative input of the full cube.

    For a fixed positive ``x`` the pair sum depends on ``y`` only through the
    agreement set ``A = {i : x_i = y_i}``: coordinate ``(e, x_S)`` of
    ``u_{y,j}`` is ``sqrt(w_e(x_S))/c`` whenever ``S`` lies in ``A``.  Every
    ``A`` whose assignment ``x_A`` is not a 1-certificate is enumerated, which
    covers each negative ``y`` (and possibly classes no negative realises).
    """
    G, f = bundle.graph, bundle.f
    n = G.n
    positives = list(positives) if positives is not None else list(bundle.positive)
    report = FeasibilityReport()
    scale = _negative_scale(bundle)
    for x in positives:
        coords = bundle.positive[x]
        arcs = sorted(coords)
        origin = [G.arcs[a].origin for a in arcs]
        loaded = [G.arcs[a].loaded for a in arcs]
        neg = []
        for a in arcs:
            arc = G.arcs[a]
            wy = w(arc, restrict(x, arc.indices))
            neg.append((scale, Fraction(wy) if bundle.exact else wy))
        xs = format_input(x)
        if bundle.exact:
            terms = [_product(coords[a], d) for a, d in zip(arcs, neg)]
        else:
            terms = np.array([_product(coords[a], d) for a, d in zip(arcs, neg)], dtype=float)
            origin_arr = np.array(origin, dtype=np.int64)
            loaded_bit = np.left_shift(np.int64(1), np.array(loaded, dtype=np.int64))
        for A in range(1 << n):
            idx = indices_of(A)
            if is_accepting_assignment(f, idx, restrict(x, idx)):
                continue
            if bundle.exact:
                s = sum(
                    (t for t, o, j in zip(terms, origin, loaded) if not o & ~A and not A >> j & 1),
                    Fraction(0),
                )
            else:
                sel = ((origin_arr & ~A) == 0) & ((loaded_bit & A) == 0)
                s = float(terms[sel].sum())
            report.record(xs, "A=" + "|".join(str(i + 1) for i in idx), s, keep_rows)
    return report


def _negative_scale(bundle: CertificateBundle):
    # recover the 1/c factor applied by rescale_balance from any stored negative coordinate
    for cs in bundle.negative.values():
        for k, _ in cs.values():
            return k
    return Fraction(1) if bundle.exact else 1.0


def certificate_lines(bundle: CertificateBundle) -> list[str]:
    """``u <x> <j> <arc-id> <value>`` lines (1-based ``j``)."""
    out = [f"certificate f={bundle.f}"]
    G = bundle.graph
    for side in (bundle.positive, bundle.negative):
        for x, cs in side.items():
            xs = format_input(x)
            for a in sorted(cs):
                k, r = cs[a]
                val = f"{k}*sqrt({r})" if bundle.exact else repr(_value((k, r)))
                out.append(f"u {xs} {G.arcs[a].loaded + 1} {a} {val}")
    return out
