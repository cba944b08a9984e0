import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import or_like, random_rational
from learngraph.adversary import (
    balancing_constant,
    build_certificate,
    certificate_lines,
    pair_sum,
    rescale_balance,
    verify_agreement_classes,
    verify_feasibility,
)
from learngraph.complexity import graph_complexity
from learngraph.domain import FunctionSpec, enumerate_inputs
from learngraph.errors import InfeasibleError, InputError
from learngraph.flows import Flow
from learngraph.graph import ConstantWeights, TableWeights, build_layered_graph


def _certify(G, w, f, exact=False):
    rep = graph_complexity(G, w, f, exact=exact)
    return build_certificate(G, w, rep.flows, f, exact=exact), rep


def test_single_arc_certificate():
    f = FunctionSpec.parse("any:n=1,m=2,value=2")
    G = build_layered_graph(1, 1)
    b, _ = _certify(G, ConstantWeights(1), f, exact=True)
    assert b.positive == {(2,): {0: (1, 1)}}
    assert b.negative == {(1,): {0: (1, 1)}}
    assert b.objective == 1
    assert pair_sum(b, (2,), (1,)) == 1
    r = rescale_balance(b, 2)
    assert (r.positive_max, r.negative_max) == (4, Fraction(1, 4))
    assert r.objective == 1
    assert rescale_balance(b, 1).positive == b.positive


def test_or_like_certificate():
    f, G = or_like()
    b, rep = _certify(G, ConstantWeights(1), f)
    assert b.objective == pytest.approx(math.sqrt(2))
    assert b.objective == pytest.approx(rep.C, abs=1e-12)
    assert pair_sum(b, (2, 1), (1, 1)) == pytest.approx(1)
    bal = rescale_balance(b, balancing_constant(b))
    assert bal.positive_max == pytest.approx(math.sqrt(2))
    assert bal.negative_max == pytest.approx(math.sqrt(2))
    assert bal.objective == pytest.approx(b.objective)
    rep = verify_feasibility(b)
    assert rep.pairs == 3 and rep.ok()


def test_zero_flow_arc_has_no_coordinate():
    f, G = or_like()
    b, _ = _certify(G, ConstantWeights(1), f)
    # (2,1) routes everything through the arc loading index 1
    assert set(b.positive[(2, 1)]) == {a.id for a in G.arcs if a.loaded == 0}


def test_flow_through_zero_weight_arc_rejected():
    f = FunctionSpec.parse("any:n=1,m=2,value=2")
    G = build_layered_graph(1, 1)
    with pytest.raises(InfeasibleError):
        build_certificate(G, ConstantWeights(0), {(2,): Flow((2,), [1.0])}, f)
    with pytest.raises(InputError):
        build_certificate(G, ConstantWeights(1), {(1,): Flow((1,), [1.0])}, f)


def test_rescale_rejects_nonpositive():
    f, G = or_like()
    b, _ = _certify(G, ConstantWeights(1), f)
    for c in (0, -1):
        with pytest.raises(InputError):
            rescale_balance(b, c)


def test_rescale_preserves_pair_sums_and_objective():
    rng = random.Random(3)
    f, G = or_like()
    w = TableWeights({(a.id, ()): random_rational(rng) for a in G.arcs})
    b, _ = _certify(G, w, f, exact=True)
    base = {(x, y): pair_sum(b, x, y) for x in b.positive for y in b.negative}
    for _ in range(20):
        c = random_rational(rng, 1, 50)
        r = rescale_balance(b, c)
        assert {(x, y): pair_sum(r, x, y) for x in r.positive for y in r.negative} == base
        assert r.positive_max * r.negative_max == b.positive_max * b.negative_max


def random_table_function(rng, n, m):
    while True:
        bits = [rng.random() < 0.4 for _ in range(m**n)]
        if any(bits) and not all(bits):
            return FunctionSpec(n=n, m=m, kind="table", table=tuple(int(b) for b in bits))


def random_assignment_weights(rng, G, f):
    table = {}
    for x in enumerate_inputs(f):
        for a in G.arcs:
            key = (a.id, tuple(x[i] for i in a.indices))
            table.setdefault(key, random_rational(rng))
    return TableWeights(table)


def test_feasibility_on_random_functions_exact():
    rng = random.Random(17)
    for _ in range(25):
        n, m = rng.choice([(2, 2), (2, 3), (3, 2)])
        f = random_table_function(rng, n, m)
        G = build_layered_graph(n, n)
        w = random_assignment_weights(rng, G, f)
        b, rep = _certify(G, w, f, exact=True)
        feas = verify_feasibility(b)
        assert feas.exact_ok and feas.max_deviation == 0
        assert feas.pairs == len(b.positive) * len(b.negative)
        assert verify_agreement_classes(b, w).exact_ok
        assert b.positive_max == rep.P and b.negative_max == rep.N


def test_agreement_classes_cover_explicit_pairs():
    rng = random.Random(4)
    f = FunctionSpec.kdist(2, 3, 3)
    G = build_layered_graph(3, 3)
    w = random_assignment_weights(rng, G, f)
    b, _ = _certify(G, w, f, exact=True)
    explicit = verify_feasibility(b)
    classes = verify_agreement_classes(b, w, keep_rows=True)
    assert explicit.exact_ok and classes.exact_ok
    # every class label names a non-accepting agreement set
    assert all(row[1].startswith("A=") for row in classes.rows)


def test_certificate_lines_are_one_based():
    f = FunctionSpec.parse("any:n=1,m=2,value=2")
    b, _ = _certify(build_layered_graph(1, 1), ConstantWeights(1), f, exact=True)
    lines = certificate_lines(b)
    assert lines[0] == "certificate f=any:n=1,m=2,value=2"
    assert "u 2 1 0 1*sqrt(1)" in lines


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 20.0), st.integers(0, 10_000))
def test_balancing_equalises_sides(c, seed):
    rng = random.Random(seed)
    f, G = or_like()
    w = TableWeights({(a.id, ()): random_rational(rng) for a in G.arcs})
    b = rescale_balance(_certify(G, w, f)[0], c)
    bal = rescale_balance(b, balancing_constant(b))
    assert bal.positive_max == pytest.approx(bal.negative_max, rel=1e-9)
    assert bal.objective == pytest.approx(b.objective, rel=1e-9)
