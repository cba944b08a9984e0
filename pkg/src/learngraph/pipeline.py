"""End-to-end runs shared by the CLI and the acceptance suite: build a
construction, cost it, compile its certificate and verify it."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .adversary import CertificateBundle, FeasibilityReport, build_certificate, verify_agreement_classes, verify_feasibility
from .complexity import ComplexityReport, graph_complexity
from .domain import DEFAULT_ENUMERATION_CAP, FunctionSpec, InputPoint, enumerate_inputs
from .errors import InputError
from .flows import Flow
from .graph import ConstantWeights, LearningGraph, Weight, build_layered_graph
from .kdist.alg1 import build_alg1_tiny
from .kdist.baseline import build_baseline_graph
from .kdist.params import rho_exponents, round_size, stage_params
from .kdist.promise import build_promised_instance


@dataclass
class Construction:
    name: str
    f: FunctionSpec
    graph: LearningGraph
    weights: Weight
    flows: dict[InputPoint, Flow] | None
    positives: list[InputPoint]
    negatives: list[InputPoint]
    config: dict = field(default_factory=dict)
    # True when the listed inputs are orbit representatives rather than the whole domain
    representative: bool = False

    @property
    def inputs(self) -> list[InputPoint]:
        return self.positives + self.negatives


def baseline_construction(k: int, n: int, m: int | None = None, r: int | None = None, cap: int = DEFAULT_ENUMERATION_CAP) -> Construction:
    m = m or n
    if r is None:
        r = max(1, min(n - k, round_size(n, Fraction(k, k + 1))))
    b = build_baseline_graph(k, n, m, r, cap=cap)
    f = b.f
    negatives = list(enumerate_inputs(f, "negative", cap=cap))
    return Construction("baseline", f, b.graph, b.weights, b.flows, list(b.flows), negatives, {"k": k, "n": n, "m": m, "r": r})


def alg1_construction(k: int, n: int, ell, r=None, seed: int | None = 0, cap: int = 2_000_000) -> Construction:
    params = stage_params(k, n, ell, r, warn=False)
    inst = build_promised_instance(k, n, ell, seed=seed)
    tiny = build_alg1_tiny(params, inst, cap=cap)
    cfg = {"k": k, "n": n, "l": ",".join(map(str, params.ell)), "r": ",".join(map(str, params.r)), "layout_seed": seed}
    return Construction("alg1", inst.f, tiny.graph, tiny.weights, tiny.flows, [inst.positive], [inst.negative], cfg, representative=True)


def layered_construction(f: FunctionSpec, depth: int, weight=1) -> Construction:
    G = build_layered_graph(f.n, depth)
    pos = list(enumerate_inputs(f, "positive"))
    neg = list(enumerate_inputs(f, "negative"))
    return Construction("layered", f, G, ConstantWeights(weight), None, pos, neg, {"f": str(f), "depth": depth, "weight": weight})


def complexity_of(c: Construction, exact: bool = False, jobs: int = 1) -> ComplexityReport:
    """Costs of the construction's own flows, or optimal flows if it has none."""
    return graph_complexity(c.graph, c.weights, c.f, inputs=c.inputs, flows=c.flows, exact=exact, jobs=jobs)


@dataclass
class VerificationResult:
    bundle: CertificateBundle
    report: FeasibilityReport
    complexity: ComplexityReport
    classes: FeasibilityReport | None = None

    @property
    def max_deviation(self) -> float:
        devs = [self.report.max_deviation]
        if self.classes is not None:
            devs.append(self.classes.max_deviation)
        return max(devs)

    @property
    def exact_ok(self) -> bool | None:
        flags = [r.exact_ok for r in (self.report, self.classes) if r is not None]
        if any(f is None for f in flags):
            return None
        return all(flags)


def certify(c: Construction, exact: bool = False, jobs: int = 1) -> tuple[CertificateBundle, ComplexityReport]:
    rep = complexity_of(c, exact=exact, jobs=jobs)
    bundle = build_certificate(c.graph, c.weights, rep.flows, c.f, negatives=c.negatives, exact=exact)
    return bundle, rep


def verify(c: Construction, exact: bool = False, jobs: int = 1, keep_rows: bool = True) -> VerificationResult:
    """Check every listed pair; for orbit representatives also check every
    agreement class, which covers all negatives of the cube."""
    bundle, rep = certify(c, exact=exact, jobs=jobs)
    report = verify_feasibility(bundle, keep_rows=keep_rows)
    classes = verify_agreement_classes(bundle, c.weights, keep_rows=keep_rows) if c.representative else None
    return VerificationResult(bundle, report, rep, classes)
