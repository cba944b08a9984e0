import math
import random
from fractions import Fraction

import pytest

from conftest import or_like, random_rational
from learngraph.complexity import graph_complexity
from learngraph.domain import FunctionSpec, SymmetryElement, enumerate_inputs
from learngraph.errors import InputError, ResourceCapError, TransportUnsoundError
from learngraph.flows import flow_cost, optimal_flow, validate_flow
from learngraph.graph import ConstantWeights, TableWeights, build_layered_graph, mask_of
from learngraph.symmetry import (
    ClassStats,
    Layout,
    Specification,
    SpecClassWeights,
    TypeMatrix,
    class_key,
    map_arc,
    specification_of,
    symmetrize,
    symmetry_group,
    transport_flow,
    type_distance,
    type_of,
    weight_from_class_stats,
)


def test_specification_examples():
    assert specification_of([0, 1, 2], (5, 5, 7), 3) == Specification((1, 1))
    assert specification_of([], (1, 2, 3), 3) == Specification((0, 0))
    assert specification_of([0, 1], (1, 2, 3), 3) == Specification((2, 0))
    s = specification_of([0, 1, 2], (5, 5, 5), 3)
    assert s.accepting and str(s) == "(0,0)!"
    with pytest.raises(InputError):
        specification_of([0], (1,), 1)


def _layout():
    # k=3: A_1 = {0}, {1}; A_2 = {2,3}, {4,5}; M = {6,7,8}; 9 is slack
    return Layout(3, (((0,), (1,)), ((2, 3), (4, 5))), marked=(6, 7, 8))


X = (1, 2, 3, 3, 4, 4, 5, 5, 5, 6)


def test_type_examples():
    lay = _layout()
    assert lay.ell == (2, 2) and lay.support == (0, 1, 2, 3, 4, 5)
    assert type_of([2, 3], X, lay).b == ((0, 0, 0), (0, 1, 0))
    assert type_of([2], X, lay).b == ((0, 1, 0), (0, 0, 0))
    assert type_of([6, 7], X, lay).b == ((0, 0, 0), (0, 0, 1))
    assert type_of([9], X, lay) is None
    assert type_of([6, 7, 8], X, lay) is None
    T = type_of([0, 2, 4, 5], X, lay)
    assert T.spec == Specification((2, 1)) and T.column_usage() == (1, 2, 0)


def test_type_distance():
    T = TypeMatrix(((1, 0), (0, 2)))
    assert type_distance(T, T) == 0
    assert type_distance(T, TypeMatrix(((1, 3), (0, 2)))) == 3
    with pytest.raises(InputError):
        type_distance(T, TypeMatrix(((1,),)))


def test_class_keys():
    G = build_layered_graph(4, 4)
    x = (1, 1, 1, 2)
    a = G.arc(mask_of([0, 1, 2]), 3)
    b = G.arc(mask_of([0, 1, 3]), 2)
    assert class_key(a, x) == class_key(b, x) == 3
    assert class_key(a, x, "bySpecification", 4) == Specification((0, 0, 1))
    assert class_key(b, x, "bySpecification", 4) == Specification((1, 1, 0))
    d, e = G.arc(mask_of([0]), 1), G.arc(mask_of([0]), 2)
    for mode in ("bySize", "bySpecification"):
        assert class_key(d, x, mode, 3) == class_key(e, x, mode, 3)
    with pytest.raises(InputError):
        class_key(a, x, "byColour")


def test_spec_class_weights():
    w = SpecClassWeights(3, {(2, (0, 1)): 5, (2, (2, 0)): 7})
    G = build_layered_graph(3, 3)
    arc = G.arc(mask_of([0, 1]), 2)
    assert w(arc, (4, 4)) == 5
    assert w(arc, (4, 5)) == 7
    assert w(G.arc(mask_of([0]), 1), (4,)) == 0


def test_symmetry_group_sizes():
    assert len(symmetry_group(FunctionSpec.kdist(2, 3, 3))) == 36
    # [some x_i = 2] fixes the symbol 2: index swaps only
    assert len(symmetry_group(FunctionSpec.parse("any:n=2,m=2,value=2"))) == 2
    with pytest.raises(ResourceCapError):
        symmetry_group(FunctionSpec.kdist(2, 6, 6), cap=1000)


def test_symmetrize_fixed_point():
    f = FunctionSpec.kdist(2, 3, 3)
    G = build_layered_graph(3, 3)
    rep = graph_complexity(G, ConstantWeights(1), f, exact=True)
    w2, flows2 = symmetrize(G, ConstantWeights(1), rep.flows, f)
    assert set(w2.table.values()) == {1}
    assert all(flows2[x].values == rep.flows[x].values for x in rep.flows)


def _random_weights(rng, G, f):
    table = {}
    for x in enumerate_inputs(f):
        for a in G.arcs:
            table.setdefault((a.id, tuple(x[i] for i in a.indices)), random_rational(rng))
    return TableWeights(table)


FUNCTIONS = ["ed:n=2,m=2", "ed:n=2,m=3", "any:n=3,m=2,value=2", "ed:n=3,m=3", "any:n=2,m=2,value=2", "any:n=3,m=2,value=1", "kdist:k=3,n=3,m=2"]


def test_symmetrize_never_increases_complexity_exact():
    rng = random.Random(9)
    for i in range(50):
        f = FunctionSpec.parse(FUNCTIONS[i % len(FUNCTIONS)])
        G = build_layered_graph(f.n, f.n)
        w = _random_weights(rng, G, f)
        before = graph_complexity(G, w, f, exact=True)
        w2, flows2 = symmetrize(G, w, before.flows, f)
        after = graph_complexity(G, w2, f, flows=flows2, exact=True)
        assert after.C <= before.C
        for x, p in flows2.items():
            assert validate_flow(G, w2, x, p, f).ok
        # the averaged weights are invariant under the group
        for s in symmetry_group(f):
            for x in enumerate_inputs(f):
                sx = s.apply(x)
                for a in G.arcs:
                    b = map_arc(G, s, a)
                    assert w2(b, tuple(sx[j] for j in b.indices)) == w2(a, tuple(x[j] for j in a.indices))


def test_symmetrize_or_like_random():
    rng = random.Random(2)
    f, G = or_like()
    w = _random_weights(rng, G, f)
    before = graph_complexity(G, w, f, exact=True)
    w2, flows2 = symmetrize(G, w, before.flows, f, group="sampled", samples=2, seed=1)
    assert graph_complexity(G, w2, f, flows=flows2, exact=True).C <= before.C


def test_transport_examples():
    f, G = or_like()
    w = ConstantWeights(1)
    p = optimal_flow(G, w, (2, 1), f, exact=True)
    assert transport_flow(G, w, SymmetryElement.identity(2, 2), p).values == p.values
    q = transport_flow(G, w, SymmetryElement((1, 0), (1, 2)), p)
    assert q.x == (1, 2)
    assert validate_flow(G, w, q.x, q, f).ok
    assert flow_cost(G, w, q.x, q) == flow_cost(G, w, p.x, p)
    g = FunctionSpec.kdist(2, 2, 2)
    p = optimal_flow(build_layered_graph(2, 2), w, (1, 1), g, exact=True)
    r = transport_flow(build_layered_graph(2, 2), w, SymmetryElement((0, 1), (2, 1)), p)
    assert r.x == (2, 2) and r.values == p.values


def test_transport_detects_weight_mismatch():
    f, G = or_like()
    w = TableWeights({(0, ()): 1, (1, ()): 3})
    p = optimal_flow(G, w, (2, 1), f, exact=True)
    with pytest.raises(TransportUnsoundError):
        transport_flow(G, w, SymmetryElement((1, 0), (1, 2)), p)


def test_transport_round_trip_random():
    rng = random.Random(12)
    f = FunctionSpec.kdist(2, 3, 3)
    G = build_layered_graph(3, 3)
    w = ConstantWeights(1)
    group = symmetry_group(f)
    for x in list(enumerate_inputs(f, "positive"))[:6]:
        p = optimal_flow(G, w, x, f, exact=True)
        s = rng.choice(group)
        q = transport_flow(G, w, s, p)
        assert q.x == s.apply(x)
        assert transport_flow(G, w, s.inverse(), q).values == p.values


def test_class_stat_weighting():
    one = weight_from_class_stats([ClassStats("E", 1, 4, 3)])
    assert one.weights["E"] == 0.5 and one.estimate == 6
    two = weight_from_class_stats([ClassStats("E", 1, 4, 3), ClassStats("F", 1, 4, 3)])
    assert two.estimate == 2 * one.estimate
    with pytest.raises(InputError):
        weight_from_class_stats([ClassStats("E", 1, 0, 1)])
    with pytest.raises(InputError):
        ClassStats("E", -1, 1, 1)


def test_baseline_class_estimate():
    n, r = 1000, 100
    stats = [ClassStats(("first", i), 1, 1, 1, step=i) for i in range(r)]
    stats += [ClassStats("second1", 1, n, 1), ClassStats("second2", 1, Fraction(n * n, r), 1)]
    est = weight_from_class_stats(stats).estimate
    assert est == pytest.approx(r + math.sqrt(n) + n / math.sqrt(r))
