"""Stage parameters of the k-distinctness learning graph: the exponent
recurrence, round sizes, dead-end caps, the step schedule and the
per-step valid specifications."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterator, Sequence

from ..errors import ConstructionError, InputError
from .counting import expected_subtuples


def rho_exponents(k: int) -> tuple[Fraction, ...]:
    """``(rho_0, ..., rho_k)`` with ``rho_0 = 1``, ``rho_k = 1/2`` and each
    gap half the previous one."""
    if k < 2:
        raise InputError(f"k must be at least 2, got {k}")
    gap = Fraction(2 ** (k - 2), 2**k - 1)
    out = [Fraction(1)]
    for _ in range(k):
        out.append(out[-1] - gap)
        gap /= 2
    assert out[-1] == Fraction(1, 2)
    return tuple(out)


def query_exponent(k: int) -> Fraction:
    return rho_exponents(k)[1]


def round_size(n: int, rho: Fraction) -> int:
    """``n ** rho`` rounded half up, at least 1."""
    return max(1, math.floor(n ** float(rho) + 0.5))


@dataclass(frozen=True)
class StepLabel:
    """``kind`` is ``first`` (``j``), ``prep`` (``i, j, l``) or ``last`` (``j``)."""

    kind: str
    j: int
    i: int = 0
    l: int = 0

    def __str__(self) -> str:
        if self.kind == "prep":
            return f"({self.i},{self.j},{self.l})"
        return f"{self.kind}{self.j}"


@dataclass(frozen=True)
class StageParams:
    k: int
    n: int
    ell: tuple[int, ...]
    r: tuple[int, ...]
    rho: tuple[Fraction, ...]
    caps: tuple[Fraction, ...]

    @property
    def support_size(self) -> int:
        """``n' = |A_{>=1}|``."""
        return sum(t * c for t, c in enumerate(self.ell, start=1))

    @property
    def first_stage_length(self) -> int:
        return self.r[0] if self.k >= 3 else self.r[0] - 1

    @property
    def depth(self) -> int:
        return self.r[0] + sum(i * self.r[i - 1] for i in range(2, self.k)) + 1

    def cap(self, t: int) -> Fraction:
        """Largest admissible number of ``t``-subtuples after the first stage."""
        return self.caps[t - 2]

    @property
    def dead_end_constants(self) -> tuple[Fraction, ...]:
        """``c_t`` with ``cap_t = c_t r_1^t / n^(t-1)``."""
        r1 = self.r[0]
        return tuple(Fraction(c * self.n ** (t - 1), r1**t) for t, c in enumerate(self.caps, start=2))


def dead_end_caps(k: int, ell: Sequence[int], r1: int) -> tuple[Fraction, ...]:
    """Markov caps ``2(k-2) E_t`` for ``t = 2..k-1``: each cap is exceeded by
    a uniform ``r_1``-subset with probability at most ``1/(2(k-2))``, so at
    least half of the subsets survive."""
    return tuple(2 * (k - 2) * expected_subtuples(ell, r1, t) for t in range(2, k))


def stage_params(k: int, n: int, ell: Sequence[int], r: Sequence[int] | None = None, warn: bool = True) -> StageParams:
    ell = tuple(int(v) for v in ell)
    if k < 2:
        raise InputError("k must be at least 2")
    if len(ell) != k - 1 or any(v < 0 for v in ell):
        raise InputError(f"need {k - 1} nonnegative promise counts, got {ell}")
    rho = rho_exponents(k)
    if r is None:
        r = tuple(round_size(n, rho[i]) for i in range(1, k))
    r = tuple(int(v) for v in r)
    if len(r) != k - 1 or any(v < 1 for v in r):
        raise InputError(f"need {k - 1} round sizes of at least 1, got {r}")
    nprime = sum(t * c for t, c in enumerate(ell, start=1))
    if nprime + k > n:
        raise InputError(f"promise occupies {nprime} indices, leaving no room for {k} marked ones in n={n}")
    if r[0] > nprime:
        raise InputError(f"r_1={r[0]} exceeds |A|={nprime}")
    if warn:
        if any(r[i + 1] >= r[i] for i in range(k - 2)):
            warnings.warn(f"round sizes {r} are not strictly decreasing at n={n}", stacklevel=2)
        if k >= 3 and math.sqrt(r[0]) * r[1] >= n:
            warnings.warn(f"sqrt(r_1) r_2 = {math.sqrt(r[0]) * r[1]:.1f} is not small against n={n}", stacklevel=2)
    return StageParams(k, n, ell, r, rho, dead_end_caps(k, ell, r[0]))


def step_schedule(params: StageParams) -> list[StepLabel]:
    k, r = params.k, params.r
    steps = [StepLabel("first", j) for j in range(1, params.first_stage_length + 1)]
    for i in range(2, k):
        rounds = r[i - 1] - 1 if i == k - 1 else r[i - 1]
        for j in range(1, rounds + 1):
            steps.extend(StepLabel("prep", j, i, l) for l in range(1, i + 1))
    steps.extend(StepLabel("last", j) for j in range(1, k + 1))
    assert len(steps) == params.depth
    return steps


def spec_shift(params: StageParams, step: StepLabel) -> tuple[int, ...]:
    """What a valid specification before ``step`` adds to its original one."""
    k = params.k
    shift = [0] * (k - 1)
    if step.kind == "first":
        return tuple(shift)
    i = step.i if step.kind == "prep" else k - 1
    j = step.j if step.kind == "prep" else params.r[k - 2]
    l = step.l if step.kind == "prep" else step.j
    for t in range(2, i):
        shift[t - 1] += params.r[t - 1]
    if i >= 2:
        shift[i - 1] += j - 1
    if l >= 2:
        shift[l - 2] += 1
    return tuple(shift)


def is_original_valid(params: StageParams, b: Sequence[int]) -> bool:
    """A specification right after the first stage that is not a dead-end."""
    if len(b) != params.k - 1 or any(v < 0 for v in b):
        return False
    if sum(t * c for t, c in enumerate(b, start=1)) != params.r[0]:
        return False
    return all(b[t - 1] <= params.cap(t) for t in range(2, params.k))


def original_spec(params: StageParams, step: StepLabel, b: Sequence[int]) -> tuple[int, ...]:
    """Trace a specification before ``step`` back to the first stage."""
    shift = spec_shift(params, step)
    return tuple(v - s for v, s in zip(b, shift))


def is_valid_spec(params: StageParams, step: StepLabel, b: Sequence[int]) -> bool:
    size = sum(t * c for t, c in enumerate(b, start=1))
    if step.kind == "first":
        return size == step.j - 1 and all(v >= 0 for v in b)
    if params.k == 2:
        # no dead-ends without caps: every specification of the right size
        return size == params.first_stage_length + step.j - 1 and all(v >= 0 for v in b)
    return is_original_valid(params, original_spec(params, step, b))


def apply_step(b: Sequence[int], level: int) -> tuple[int, ...]:
    """Specification after loading an element of level ``level``."""
    out = list(b)
    if not 1 <= level <= len(out):
        raise InputError(f"level {level} outside 1..{len(out)}")
    out[level - 1] += 1
    if level >= 2:
        if out[level - 2] == 0:
            raise InputError(f"no {level - 1}-subtuple to extend")
        out[level - 2] -= 1
    return tuple(out)


def _specs_of_size(size: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        yield (size,)
        return
    for top in range(size // parts + 1):
        for rest in _specs_of_size(size - top * parts, parts - 1):
            yield rest + (top,)


def valid_specs_for_step(params: StageParams, step: StepLabel) -> frozenset[tuple[int, ...]]:
    schedule = step_schedule(params)
    if step not in schedule:
        raise InputError(f"step {step} is not part of the schedule")
    size = schedule.index(step)
    return frozenset(b for b in _specs_of_size(size, params.k - 1) if is_valid_spec(params, step, b))


def D_function(ell: Sequence[int], i: int, z: Sequence[int]) -> int:
    """Number of fresh ``i``-subtuples available when ``z_s`` of the
    ``s``-tuples are already touched."""
    k = len(ell) + 1
    if any(zs > ls for zs, ls in zip(z, ell)):
        raise InputError(f"usage {tuple(z)} exceeds the promise {tuple(ell)}")
    return sum((ell[s - 1] - z[s - 1]) * comb(s, i) for s in range(i, k))


def flow_on_arc(key_flow, s: int, i: int, l: int, N: int):
    """Flow through an arc that loads the ``l``-th element of a fresh
    ``i``-subtuple taken from an ``s``-tuple, given the flow of the
    preceding key vertex and its successor count ``N``."""
    if N <= 0:
        raise ConstructionError("a key vertex with flow has no succeeding key vertex")
    if s < i or not 1 <= l <= i:
        return 0 * key_flow
    return Fraction(comb(s, i), comb(s, l) * l * N) * key_flow if isinstance(key_flow, (int, Fraction)) else comb(s, i) / comb(s, l) * key_flow / (l * N)
