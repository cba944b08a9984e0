import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import or_like, random_rational, random_small_graph
from learngraph.complexity import graph_complexity, negative_complexity
from learngraph.domain import FunctionSpec
from learngraph.errors import ConditioningError, DegenerateInstanceError, InfeasibleError, InputError, ResourceCapError
from learngraph.flows import Flow, condition_flow, flow_cost, optimal_flow, qp_optimal_flow, random_path_flow, validate_flow
from learngraph.graph import ConstantWeights, LearningGraph, build_layered_graph, mask_of


def test_layered_graph_shapes():
    G = build_layered_graph(2, 1)
    assert sorted(G.vertices) == [0, 1, 2]
    assert {(a.origin, a.loaded) for a in G.arcs} == {(0, 0), (0, 1)}
    G = build_layered_graph(3, 3)
    assert len(G.vertices) == 8 and len(G.arcs) == 12
    G = build_layered_graph(3, 2, vertex_filter=lambda S: S != frozenset({2}))
    assert mask_of([2]) not in G.vertices
    assert all(a.target != mask_of([2]) and a.origin != mask_of([2]) for a in G.arcs)


def test_layered_graph_cap_and_bad_depth():
    with pytest.raises(ResourceCapError):
        build_layered_graph(20, 10, cap=1000)
    with pytest.raises(InputError):
        build_layered_graph(3, 4)


def _chain_weights(values):
    return lambda arc, alpha: values[arc.id]


def test_negative_complexity_examples():
    G = LearningGraph(3, 1, [0, 1, 2, 4], [(0, 0), (0, 1), (0, 2)])
    assert negative_complexity(G, ConstantWeights(1), (1, 2, 3)) == 3
    assert negative_complexity(G, _chain_weights([0.5, 0.25, 0.25]), (1, 2, 3)) == 1.0
    assert negative_complexity(G, ConstantWeights(0), (1, 2, 3)) == 0


def _diamond():
    # two parallel length-2 paths from the root to {1,2}
    return LearningGraph(2, 2, [0, 1, 2, 3], [(0, 0), (0, 1), (1, 1), (2, 0)])


def test_flow_cost_conventions():
    G = _diamond()
    f = FunctionSpec.kdist(2, 2, 2)
    x = (1, 1)
    half = Flow(x, [Fraction(1, 2)] * 4)
    assert flow_cost(G, ConstantWeights(1), x, half) == 1
    # 0/0 contributes nothing
    w = _chain_weights([1, 0, 1, 0])
    assert flow_cost(G, w, x, Flow(x, [1, 0, 1, 0])) == 2
    with pytest.raises(InfeasibleError):
        flow_cost(G, w, x, half)
    assert optimal_flow(G, ConstantWeights(1), x, f).values == pytest.approx([0.5] * 4)


def test_asymmetric_parallel_paths():
    G = _diamond()
    f = FunctionSpec.kdist(2, 2, 2)
    # path through {1} has weight 1, path through {2} has weight 2
    w = lambda arc, alpha: 1 if (arc.origin, arc.loaded) in {(0, 0), (1, 1)} else 2
    p = optimal_flow(G, w, (1, 1), f)
    assert abs(flow_cost(G, w, (1, 1), p) - 2 / 3) <= 1e-12
    assert p[0] == pytest.approx(1 / 3) and p[1] == pytest.approx(2 / 3)
    exact = optimal_flow(G, w, (1, 1), f, exact=True)
    assert flow_cost(G, w, (1, 1), exact) == Fraction(2, 3)
    assert qp_optimal_flow(G, w, (1, 1), f)[0] == Fraction(2, 3)


def test_optimal_flow_errors():
    f = FunctionSpec.parse("any:n=2,m=2,value=2")
    G = build_layered_graph(2, 1)
    with pytest.raises(InfeasibleError):
        optimal_flow(G, ConstantWeights(1), (1, 1), f)
    G0 = LearningGraph(1, 0, [0], [])
    with pytest.raises(DegenerateInstanceError):
        optimal_flow(G0, ConstantWeights(1), (2,), FunctionSpec.parse("table:n=1,m=2,bits=11"))
    with pytest.raises(InfeasibleError):
        optimal_flow(G, ConstantWeights(0), (2, 2), f)


def test_validate_flow_flags():
    f, G = or_like()
    x = (2, 1)
    p = optimal_flow(G, ConstantWeights(1), x, f)
    assert validate_flow(G, ConstantWeights(1), x, p, f).ok
    weak = Flow(x, [0.9 * v for v in p.values])
    rep = validate_flow(G, ConstantWeights(1), x, weak, f)
    assert not rep.intensity_ok and not rep.ok
    # send everything into the non-accepting leaf {2}
    leak = Flow(x, [1.0 if a.loaded == 1 else 0.0 for a in G.arcs])
    rep = validate_flow(G, ConstantWeights(1), x, leak, f)
    assert rep.conservation_violations == [mask_of([1])]


def test_complexity_examples():
    f, G = or_like()
    rep = graph_complexity(G, ConstantWeights(1), f)
    assert rep.N == 2
    assert rep.P == pytest.approx(1)
    assert rep.C == pytest.approx(math.sqrt(2))
    f1 = FunctionSpec.parse("any:n=1,m=2,value=2")
    rep = graph_complexity(build_layered_graph(1, 1), ConstantWeights(1), f1, exact=True)
    assert (rep.N, rep.P) == (1, 1) and rep.C == 1


def test_complexity_names_infeasible_input():
    f = FunctionSpec.parse("any:n=2,m=2,value=2")
    G = LearningGraph(2, 1, [0, 1], [(0, 0)])
    with pytest.raises(InfeasibleError, match="1,2"):
        graph_complexity(G, ConstantWeights(1), f)


def _random_instance(rng):
    G = random_small_graph(rng)
    # on the all-ones input, S is accepting iff |S| >= k
    k = rng.randint(2, max(2, G.depth))
    f = FunctionSpec.kdist(k, G.n, 2)
    w = {a.id: random_rational(rng) for a in G.arcs}
    return G, f, (1,) * G.n, (lambda arc, alpha: w[arc.id])


def test_flow_solver_matches_qp_on_random_graphs():
    rng = random.Random(7)
    checked = 0
    while checked < 200:
        G, f, x, w = _random_instance(rng)
        try:
            best, _ = qp_optimal_flow(G, w, x, f)
        except (InfeasibleError, DegenerateInstanceError):
            continue
        p = optimal_flow(G, w, x, f)
        assert abs(flow_cost(G, w, x, p) - float(best)) <= 1e-9
        assert flow_cost(G, w, x, optimal_flow(G, w, x, f, exact=True)) == best
        assert validate_flow(G, w, x, p, f).ok
        checked += 1


def test_optimal_flow_beats_random_paths():
    rng = random.Random(11)
    nrng = np.random.Generator(np.random.Philox(11))
    done = 0
    while done < 50:
        G, f, x, w = _random_instance(rng)
        try:
            p = optimal_flow(G, w, x, f)
            q = random_path_flow(G, w, x, f, nrng)
        except (InfeasibleError, DegenerateInstanceError):
            continue
        assert validate_flow(G, w, x, q, f).ok
        assert flow_cost(G, w, x, p) <= flow_cost(G, w, x, q) + 1e-9
        done += 1


def test_cg_path_matches_dense(monkeypatch):
    import learngraph.flows as flows

    G = build_layered_graph(6, 4)
    f = FunctionSpec.kdist(2, 6, 6)
    x = (1, 2, 3, 4, 5, 1)
    w = lambda arc, alpha: 1 + (arc.id % 5)
    dense = optimal_flow(G, w, x, f)
    monkeypatch.setattr(flows, "DENSE_LIMIT", 0)
    sparse = optimal_flow(G, w, x, f)
    assert np.allclose(dense.values, sparse.values, atol=1e-10)


# --- conditioning -----------------------------------------------------------


def _star():
    return LearningGraph(2, 1, [0, 1, 2], [(0, 0), (0, 1)])


def test_condition_examples():
    G = _star()
    p = Flow((1, 1), [Fraction(1, 2), Fraction(1, 2)])
    q = condition_flow(G, p, [1, 2], [1])
    assert q.values == [1, 0]
    assert condition_flow(G, p, [1, 2], [1, 2]).values == p.values
    p = Flow((1, 1), [Fraction(9, 10), Fraction(1, 10)])
    q = condition_flow(G, p, [1, 2], [2])
    assert q.values == [0, 1]
    w = ConstantWeights(1)
    assert flow_cost(G, w, (1, 1), q) <= flow_cost(G, w, (1, 1), p) * 100


def test_condition_errors():
    G = _star()
    with pytest.raises(ConditioningError):
        condition_flow(G, Flow((1, 1), [Fraction(1), Fraction(0)]), [1, 2], [2])
    with pytest.raises(InputError):
        condition_flow(G, Flow((1, 1), [Fraction(2), Fraction(-1)]), [1, 2], [1])
    with pytest.raises(InputError):
        condition_flow(G, Flow((1, 1), [Fraction(1), Fraction(0)]), [1], [2])


def random_conditioning_instance(rng):
    """Random nonnegative exact flow on a full lattice ending at the top layer V."""
    n = rng.randint(2, 4)
    depth = rng.randint(1, n)
    G = build_layered_graph(n, depth)
    x = (1,) * n
    values = [Fraction(0)] * len(G.arcs)
    # a convex mix of random root-to-top paths
    shares = [random_rational(rng) for _ in range(rng.randint(1, 5))]
    total = sum(shares)
    for s in shares:
        v = 0
        for _ in range(depth):
            a = rng.choice([G.arc(v, j) for j in range(n) if not v >> j & 1])
            values[a.id] += s / total
            v = a.target
    V = [v for v in G.vertices if v.bit_count() == depth]
    reached = [v for v in V if any(values[a.id] for a in G.arcs if a.target == v)]
    W = rng.sample(reached, rng.randint(1, len(reached)))
    w = {a.id: random_rational(rng) for a in G.arcs}
    return G, Flow(x, values), V, W, (lambda arc, alpha: w[arc.id])


def test_conditioning_cost_bound_exact():
    rng = random.Random(5)
    for _ in range(100):
        G, p, V, W, w = random_conditioning_instance(rng)
        q = condition_flow(G, p, V, W)
        t = sum(p.values[a.id] for a in G.arcs if a.target in set(W))
        assert flow_cost(G, w, p.x, q) <= flow_cost(G, w, p.x, p) / t**2
        # the conditioned flow ends inside W with unit intensity
        assert sum(q.values[a.id] for a in G.arcs if a.origin == 0) == 1
        assert all(q.values[a.id] == 0 for a in G.arcs if a.target in set(V) - set(W))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(1, 20), min_size=2, max_size=4), st.data())
def test_conditioning_star_property(mass, data):
    n = len(mass)
    G = LearningGraph(n, 1, [0] + [1 << i for i in range(n)], [(0, i) for i in range(n)])
    total = sum(mass)
    p = Flow((1,) * n, [Fraction(m, total) for m in mass])
    W = data.draw(st.sets(st.sampled_from([1 << i for i in range(n)]), min_size=1))
    q = condition_flow(G, p, [1 << i for i in range(n)], sorted(W))
    t = sum(Fraction(mass[i], total) for i in range(n) if 1 << i in W)
    for i in range(n):
        assert q.values[i] == (p.values[i] / t if 1 << i in W else 0)
