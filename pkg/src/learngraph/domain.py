"""Input domains, the k-distinctness family, certificate checks and the
index/value symmetry group.

Indices are 0-based throughout the library (``0 .. n-1``); symbols are the
1-based contiguous integers ``1 .. m``.  Text formats shown to users print
inputs as comma-separated symbols, so the index convention only surfaces in
vertex labels (see :mod:`learngraph.io`).
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence

from .errors import InputError, ResourceCapError

InputPoint = tuple[int, ...]

DEFAULT_ENUMERATION_CAP = 2_000_000


def parse_input(text: str) -> InputPoint:
    try:
        return tuple(int(tok) for tok in text.split(","))
    except ValueError as exc:
        raise InputError(f"bad input point {text!r}") from exc


def format_input(x: Sequence[int]) -> str:
    return ",".join(str(v) for v in x)


@dataclass(frozen=True)
class FunctionSpec:
    """A Boolean function on ``[m]^n``.

    ``kind`` is ``"kdist"`` (element distinctness is ``k = 2``), ``"any"``
    (some symbol equals ``value``) or ``"table"`` (explicit truth table of
    length ``m**n`` in lexicographic order, first index most significant).
    """

    n: int
    m: int
    kind: str = "kdist"
    k: int = 2
    value: int = 0
    table: tuple[int, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise InputError("n and m must be positive")
        if self.kind == "kdist":
            if not 2 <= self.k:
                raise InputError("k-distinctness needs k >= 2")
        elif self.kind == "any":
            if not 1 <= self.value <= self.m:
                raise InputError("value outside the alphabet")
        elif self.kind == "table":
            if len(self.table) != self.m**self.n:
                raise InputError(f"truth table must have {self.m ** self.n} entries")
            if any(b not in (0, 1) for b in self.table):
                raise InputError("truth table entries must be 0/1")
        else:
            raise InputError(f"unknown function kind {self.kind!r}")

    @classmethod
    def kdist(cls, k: int, n: int, m: int) -> "FunctionSpec":
        return cls(n=n, m=m, kind="kdist", k=k)

    @classmethod
    def from_predicate(cls, n: int, m: int, pred) -> "FunctionSpec":
        table = tuple(int(bool(pred(x))) for x in itertools.product(range(1, m + 1), repeat=n))
        return cls(n=n, m=m, kind="table", table=table)

    @classmethod
    def parse(cls, text: str) -> "FunctionSpec":
        """Parse ``kdist:k=3,n=6,m=6``, ``ed:n=4,m=4``, ``any:n=2,m=2,value=2``
        or ``table:n=2,m=2,bits=0111``."""
        kind, _, rest = text.partition(":")
        opts = {}
        for tok in filter(None, rest.split(",")):
            key, eq, val = tok.partition("=")
            if not eq:
                raise InputError(f"bad function option {tok!r} in {text!r}")
            opts[key.strip()] = val.strip()
        try:
            n, m = int(opts.pop("n")), int(opts.pop("m"))
            if kind == "kdist":
                spec = cls.kdist(int(opts.pop("k")), n, m)
            elif kind == "ed":
                spec = cls.kdist(2, n, m)
            elif kind == "any":
                spec = cls(n=n, m=m, kind="any", value=int(opts.pop("value")))
            elif kind == "table":
                spec = cls(n=n, m=m, kind="table", table=tuple(int(c) for c in opts.pop("bits")))
            else:
                raise InputError(f"unknown function kind {kind!r}")
        except KeyError as exc:
            raise InputError(f"function spec {text!r} is missing {exc.args[0]!r}") from exc
        except ValueError as exc:
            raise InputError(f"bad number in function spec {text!r}") from exc
        if opts:
            raise InputError(f"unknown function options {sorted(opts)}")
        return spec

    def __str__(self) -> str:
        if self.kind == "kdist":
            return f"kdist:k={self.k},n={self.n},m={self.m}"
        if self.kind == "any":
            return f"any:n={self.n},m={self.m},value={self.value}"
        return f"table:n={self.n},m={self.m},bits={''.join(map(str, self.table))}"

    @cached_property
    def symmetric(self) -> bool:
        """True when every index and value permutation preserves the function."""
        return self.kind == "kdist"


def check_input(f: FunctionSpec, x: Sequence[int]) -> None:
    if len(x) != f.n:
        raise InputError(f"input has length {len(x)}, function expects n={f.n}")
    for v in x:
        if not 1 <= v <= f.m:
            raise InputError(f"symbol {v} outside alphabet [1, {f.m}]")


def _table_index(f: FunctionSpec, x: Sequence[int]) -> int:
    idx = 0
    for v in x:
        idx = idx * f.m + (v - 1)
    return idx


def evaluate(f: FunctionSpec, x: Sequence[int]) -> int:
    check_input(f, x)
    if f.kind == "kdist":
        return int(max(Counter(x).values()) >= f.k)
    if f.kind == "any":
        return int(f.value in x)
    return f.table[_table_index(f, x)]


def restrict(x: Sequence[int], indices: Sequence[int]) -> tuple[int, ...]:
    """The assignment ``x_S`` as a tuple of symbols over ``sorted(S)``."""
    return tuple(x[i] for i in indices)


def _certifies(f: FunctionSpec, indices: Sequence[int], values: Sequence[int]) -> bool:
    # brute force over completions; only used for table/any functions
    fixed = dict(zip(indices, values))
    free = [i for i in range(f.n) if i not in fixed]
    point = [0] * f.n
    for i, v in fixed.items():
        point[i] = v
    for tail in itertools.product(range(1, f.m + 1), repeat=len(free)):
        for i, v in zip(free, tail):
            point[i] = v
        if not evaluate(f, point):
            return False
    return True


def is_accepting_assignment(f: FunctionSpec, indices: Sequence[int], values: Sequence[int]) -> bool:
    """Whether the assignment ``indices -> values`` is a 1-certificate of ``f``."""
    if f.kind == "kdist":
        return bool(values) and max(Counter(values).values()) >= f.k
    if f.kind == "any":
        return f.value in values
    return _certifies(f, indices, values)


def is_accepting(f: FunctionSpec, x: Sequence[int], S) -> bool:
    check_input(f, x)
    indices = sorted(S)
    if any(not 0 <= i < f.n for i in indices):
        raise InputError(f"subset {indices} not inside [0, {f.n})")
    return is_accepting_assignment(f, indices, restrict(x, indices))


@dataclass(frozen=True)
class SymmetryElement:
    """An element of ``S_n x S_m`` acting by ``(sx)_i = value_perm(x[index_perm[i]])``.

    ``index_perm`` is a permutation of ``0..n-1``; ``value_perm[v-1]`` is the
    image of symbol ``v``.
    """

    index_perm: tuple[int, ...]
    value_perm: tuple[int, ...]

    def __post_init__(self):
        n, m = len(self.index_perm), len(self.value_perm)
        if sorted(self.index_perm) != list(range(n)):
            raise InputError("index_perm is not a permutation")
        if sorted(self.value_perm) != list(range(1, m + 1)):
            raise InputError("value_perm is not a permutation")

    @classmethod
    def identity(cls, n: int, m: int) -> "SymmetryElement":
        return cls(tuple(range(n)), tuple(range(1, m + 1)))

    @property
    def n(self) -> int:
        return len(self.index_perm)

    @property
    def m(self) -> int:
        return len(self.value_perm)

    @cached_property
    def _index_inverse(self) -> tuple[int, ...]:
        inv = [0] * self.n
        for i, j in enumerate(self.index_perm):
            inv[j] = i
        return tuple(inv)

    def value(self, v: int) -> int:
        return self.value_perm[v - 1]

    def apply(self, x: Sequence[int]) -> InputPoint:
        if len(x) != self.n:
            raise InputError("symmetry and input dimensions differ")
        return tuple(self.value_perm[x[j] - 1] for j in self.index_perm)

    def index(self, i: int) -> int:
        """Where index ``i`` of ``x`` lands in ``sx``."""
        return self._index_inverse[i]

    def map_set(self, S) -> frozenset[int]:
        """Image of an index set, so that ``(sx)_{s(S)}`` is the relabelled ``x_S``."""
        inv = self._index_inverse
        return frozenset(inv[i] for i in S)

    def map_mask(self, mask: int) -> int:
        inv = self._index_inverse
        out = 0
        i = 0
        while mask:
            if mask & 1:
                out |= 1 << inv[i]
            mask >>= 1
            i += 1
        return out

    def map_assignment(self, indices: Sequence[int], values: Sequence[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Image of the assignment ``indices -> values`` as sorted (indices, values)."""
        pairs = sorted((self._index_inverse[i], self.value_perm[v - 1]) for i, v in zip(indices, values))
        return tuple(p[0] for p in pairs), tuple(p[1] for p in pairs)

    def compose(self, other: "SymmetryElement") -> "SymmetryElement":
        """``(self * other) x = self(other(x))``."""
        idx = tuple(other.index_perm[j] for j in self.index_perm)
        val = tuple(self.value_perm[v - 1] for v in other.value_perm)
        return SymmetryElement(idx, val)

    def inverse(self) -> "SymmetryElement":
        val = [0] * self.m
        for v, w in enumerate(self.value_perm, start=1):
            val[w - 1] = v
        return SymmetryElement(self._index_inverse, tuple(val))


def apply_symmetry(sigma: SymmetryElement, x: Sequence[int]) -> InputPoint:
    return sigma.apply(x)


def enumerate_inputs(f: FunctionSpec, which: str = "all", cap: int = DEFAULT_ENUMERATION_CAP) -> Iterator[InputPoint]:
    if which not in ("all", "positive", "negative"):
        raise InputError(f"unknown input class {which!r}")
    if f.m**f.n > cap:
        raise ResourceCapError(f"{f.m}^{f.n} inputs exceed the enumeration cap {cap}")
    want = {"positive": 1, "negative": 0}.get(which)
    for x in itertools.product(range(1, f.m + 1), repeat=f.n):
        if want is None or evaluate(f, x) == want:
            yield x
