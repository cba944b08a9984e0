import itertools
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from learngraph.domain import (
    FunctionSpec,
    SymmetryElement,
    apply_symmetry,
    enumerate_inputs,
    evaluate,
    format_input,
    is_accepting,
    parse_input,
)
from learngraph.errors import InputError, ResourceCapError


@pytest.mark.parametrize(
    "k,x,want",
    [(2, (1, 2, 1), 1), (3, (1, 1, 2), 0), (3, (4, 4, 4, 9), 1), (2, (1, 2, 3), 0)],
)
def test_evaluate_kdist(k, x, want):
    f = FunctionSpec.kdist(k, len(x), max(x))
    assert evaluate(f, x) == want


def test_evaluate_rejects_bad_points():
    f = FunctionSpec.kdist(2, 3, 3)
    with pytest.raises(InputError):
        evaluate(f, (1, 2))
    with pytest.raises(InputError):
        evaluate(f, (1, 2, 4))


@pytest.mark.parametrize(
    "k,x,S,want",
    [(2, (1, 2, 1), {0, 2}, True), (2, (1, 2, 1), {0, 1}, False), (3, (5, 5, 5, 7), {0, 1, 2}, True)],
)
def test_is_accepting(k, x, S, want):
    f = FunctionSpec.kdist(k, len(x), max(x))
    assert is_accepting(f, x, S) is want


def test_symmetry_examples():
    x = (1, 2, 1)
    assert apply_symmetry(SymmetryElement.identity(3, 3), x) == x
    assert apply_symmetry(SymmetryElement((1, 0, 2), (1, 2, 3)), x) == (2, 1, 1)
    assert apply_symmetry(SymmetryElement((0, 1, 2), (3, 2, 1)), x) == (3, 2, 3)


def test_symmetry_rejects_non_permutations():
    with pytest.raises(InputError):
        SymmetryElement((0, 0, 1), (1, 2))
    with pytest.raises(InputError):
        SymmetryElement((0, 1), (1, 1))


def test_enumerate_small_domains():
    f = FunctionSpec.kdist(2, 2, 2)
    assert set(enumerate_inputs(f, "positive")) == {(1, 1), (2, 2)}
    assert set(enumerate_inputs(f, "negative")) == {(1, 2), (2, 1)}
    assert list(enumerate_inputs(FunctionSpec.kdist(3, 2, 2), "positive")) == []


def test_enumeration_cap():
    with pytest.raises(ResourceCapError):
        list(enumerate_inputs(FunctionSpec.kdist(2, 10, 10), cap=1000))


def test_parse_round_trip():
    for text in ("kdist:k=3,n=6,m=6", "any:n=2,m=2,value=2", "table:n=2,m=2,bits=0111"):
        assert str(FunctionSpec.parse(text)) == text
    assert FunctionSpec.parse("ed:n=4,m=4") == FunctionSpec.kdist(2, 4, 4)
    for bad in ("kdist:n=3,m=3", "nope:n=1,m=1", "any:n=2,m=2,value=5", "table:n=1,m=2,bits=0"):
        with pytest.raises(InputError):
            FunctionSpec.parse(bad)
    assert parse_input(format_input((3, 1, 2))) == (3, 1, 2)


def test_table_function_certificates():
    # OR on two bits encoded by a truth table: {x_1 = 2} certifies
    f = FunctionSpec.parse("table:n=2,m=2,bits=0111")
    assert is_accepting(f, (2, 1), {0})
    assert not is_accepting(f, (1, 2), {0})
    assert not is_accepting(f, (1, 1), {0, 1})


perms = st.integers(2, 5).flatmap(lambda n: st.tuples(st.permutations(range(n)), st.permutations(range(1, n + 1))))


@settings(max_examples=100, deadline=None)
@given(perms, st.integers(2, 3), st.data())
def test_kdist_invariant_under_symmetries(perm, k, data):
    idx, val = perm
    n = len(idx)
    sigma = SymmetryElement(tuple(idx), tuple(val))
    x = tuple(data.draw(st.lists(st.integers(1, n), min_size=n, max_size=n)))
    f = FunctionSpec.kdist(k, n, n)
    y = sigma.apply(x)
    assert evaluate(f, y) == evaluate(f, x)
    assert sigma.inverse().apply(y) == x
    # an index set maps with the input: (sx)_{s(S)} relabels x_S
    for S in itertools.combinations(range(n), 2):
        img = sigma.map_set(S)
        assert Counter(y[i] for i in img) == Counter(sigma.value(x[i]) for i in S)


@settings(max_examples=50, deadline=None)
@given(perms, perms)
def test_compose_matches_sequential_action(a, b):
    if len(a[0]) != len(b[0]):
        return
    s, t = SymmetryElement(*a), SymmetryElement(*b)
    x = tuple(range(1, len(a[0]) + 1))
    assert s.compose(t).apply(x) == s.apply(t.apply(x))
