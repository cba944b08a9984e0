"""Exact counting over a promised block layout: subsets by specification,
expected subtuple counts, and mean type matrices."""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import comb, prod
from typing import Iterator, Sequence

from ..errors import InputError


def _normalise(ell: Sequence[int], spec: Sequence[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    ell = tuple(int(v) for v in ell)
    spec = tuple(int(v) for v in spec)
    if any(v < 0 for v in ell) or any(v < 0 for v in spec):
        raise InputError("promise and specification entries must be nonnegative")
    if len(spec) > len(ell):
        if any(spec[len(ell):]):
            raise InputError(f"specification {spec} has subtuples longer than any promised tuple")
        spec = spec[: len(ell)]
    return ell, spec + (0,) * (len(ell) - len(spec))


def _compositions(total: int, caps: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """Ways to write ``total`` as ``sum(parts)`` with ``0 <= parts[i] <= caps[i]``."""
    if not caps:
        if total == 0:
            yield ()
        return
    room = sum(caps[1:])
    for first in range(max(0, total - room), min(total, caps[0]) + 1):
        for rest in _compositions(total - first, caps[1:]):
            yield (first,) + rest


def enumerate_types(ell: Sequence[int], spec: Sequence[int]) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Every ``(k-1) x (k-1)`` type ``b[t-1][s-1]`` with row sums ``spec``,
    ``b_{t,s} = 0`` for ``s < t`` and at most ``ell_s`` tuples touched per block."""
    ell, spec = _normalise(ell, spec)
    k1 = len(ell)

    def rows(t: int, used: tuple[int, ...]):
        if t > k1:
            yield ()
            return
        caps = [ell[s] - used[s] if s >= t - 1 else 0 for s in range(k1)]
        for row in _compositions(spec[t - 1], caps):
            nxt = tuple(u + v for u, v in zip(used, row))
            for tail in rows(t + 1, nxt):
                yield (row,) + tail

    yield from rows(1, (0,) * k1)


def type_multiplicity(ell: Sequence[int], b: Sequence[Sequence[int]]) -> int:
    """Number of subsets of ``A_{>=1}`` with type ``b``: the product over
    blocks of nested binomials times ``C(s,t)^{b_{t,s}}``."""
    total = 1
    for s in range(1, len(ell) + 1):
        left = ell[s - 1]
        for t in range(1, s + 1):
            c = b[t - 1][s - 1]
            total *= comb(left, c) * comb(s, t) ** c
            left -= c
    return total


def count_by_specification(ell: Sequence[int], spec: Sequence[int]) -> int:
    ell, spec = _normalise(ell, spec)
    return sum(type_multiplicity(ell, b) for b in enumerate_types(ell, spec))


def expected_subtuples(ell: Sequence[int], r: int, t: int) -> Fraction:
    """Mean number of ``t``-subtuples in a uniform ``r``-subset of ``A_{>=1}``."""
    ell = tuple(ell)
    n1 = sum(s * c for s, c in enumerate(ell, start=1))
    if not 0 <= r <= n1:
        raise InputError(f"r={r} must lie in [0, {n1}]")
    if t < 1 or r - t < 0:
        return Fraction(0)
    total = comb(n1, r)
    return sum(
        (Fraction(ell[s - 1] * comb(s, t) * comb(n1 - s, r - t), total) for s in range(t, len(ell) + 1)),
        Fraction(0),
    )


def tuple_count_ratio_bound(ell: Sequence[int], ell2: Sequence[int], spec: Sequence[int]) -> Fraction:
    """``count(ell, spec) / count(ell2, spec)`` as an exact rational."""
    den = count_by_specification(ell2, spec)
    if den == 0:
        raise InputError(f"no subset of the promise {tuple(ell2)} satisfies {tuple(spec)}")
    return Fraction(count_by_specification(ell, spec), den)


def exact_mean_type(ell: Sequence[int], spec: Sequence[int]) -> tuple[tuple[Fraction, ...], ...]:
    """Mean type matrix over uniform subsets of ``A_{>=1}`` satisfying ``spec``
    (a ``(k-1) x (k-1)`` matrix of rationals)."""
    ell, spec = _normalise(ell, spec)
    k1 = len(ell)
    acc = [[0] * k1 for _ in range(k1)]
    total = 0
    for b in enumerate_types(ell, spec):
        w = type_multiplicity(ell, b)
        total += w
        for t in range(k1):
            for s in range(k1):
                acc[t][s] += w * b[t][s]
    if total == 0:
        raise InputError(f"specification {spec} is not satisfiable on the promise {ell}")
    return tuple(tuple(Fraction(v, total) for v in row) for row in acc)


@lru_cache(maxsize=None)
def _sequence_weight(ell: tuple[int, ...], i: int, start: tuple[int, ...], target: tuple[int, ...], done: tuple[int, ...]) -> Fraction:
    if done == target:
        return Fraction(1)
    z = tuple(a + b for a, b in zip(start, done))
    d = sum((ell[s - 1] - z[s - 1]) * comb(s, i) for s in range(i, len(ell) + 1))
    if d <= 0:
        return Fraction(0)
    acc = Fraction(0)
    for s in range(len(ell)):
        if done[s] < target[s]:
            nxt = done[:s] + (done[s] + 1,) + done[s + 1 :]
            acc += _sequence_weight(ell, i, start, target, nxt)
    return acc / d


def key_flow_factor(ell: Sequence[int], b: Sequence[Sequence[int]], added: Sequence[int]) -> Fraction:
    """Flow of a key vertex of type ``b`` relative to the common flow ``p_o``
    of the first-stage vertices.

    ``added[t-1]`` fresh ``t``-subtuples were loaded on stage ``t`` (entry 0
    is ignored).  The sum runs over which subtuples of the vertex were the
    loaded ones and in which order; each step divides by the successor
    count of the key vertex it leaves.
    """
    ell = tuple(ell)
    k1 = len(ell)
    b = tuple(tuple(row[:k1]) for row in b)
    usage = [sum(b[t][s] for t in range(k1)) for s in range(k1)]

    def allocations(t: int):
        """Per-stage column allocations for stages ``t..k-1``."""
        if t > k1:
            yield ()
            return
        need = added[t - 1] if t >= 2 else 0
        caps = [b[t - 1][s] if s >= t - 1 else 0 for s in range(k1)]
        for row in _compositions(need, caps):
            for tail in allocations(t + 1):
                yield (row,) + tail

    total = Fraction(0)
    for alloc in allocations(1):
        mult = 1
        for t, row in enumerate(alloc, start=1):
            for s, a in enumerate(row):
                mult *= comb(b[t - 1][s], a) * prod(range(1, a + 1))
        # tuples touched before stage 2 started
        z = [usage[s] - sum(row[s] for row in alloc) for s in range(k1)]
        seq = Fraction(1)
        for t, row in enumerate(alloc, start=1):
            if t < 2:
                continue
            seq *= _sequence_weight(ell, t, tuple(z), tuple(row), (0,) * k1)
            z = [zs + a for zs, a in zip(z, row)]
        total += mult * seq
    return total
