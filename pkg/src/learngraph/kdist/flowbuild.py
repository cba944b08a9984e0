"""Shared pieces for assembling constructed flows arc by arc."""

from __future__ import annotations

import itertools
from collections import defaultdict
from fractions import Fraction
from math import comb, factorial
from typing import Sequence

from ..errors import ConstructionError
from ..flows import Flow
from ..graph import LearningGraph, mask_of


class FlowBuilder:
    """Accumulates exact arc flows for one input."""

    def __init__(self, G: LearningGraph, x: Sequence[int]):
        self.G = G
        self.x = tuple(x)
        self.values: dict[int, Fraction] = defaultdict(Fraction)

    def add(self, origin: int, j: int, amount: Fraction) -> None:
        key = (origin, j)
        if key not in self.G.arc_index:
            raise ConstructionError(f"the graph lacks the arc loading {j} from {origin:#x}")
        self.values[self.G.arc_index[key]] += amount

    def uniform_stage(self, pool: Sequence[int], steps: int) -> dict[int, Fraction]:
        """Spread unit flow evenly over every ordering of ``steps`` elements of
        ``pool``; returns the flow reaching each ``steps``-subset."""
        pool = tuple(sorted(pool))
        size = len(pool)
        if steps > size:
            raise ConstructionError(f"cannot load {steps} elements from a pool of {size}")
        for d in range(steps):
            per_arc = Fraction(1, comb(size, d) * (size - d))
            for S in itertools.combinations(pool, d):
                origin = mask_of(S)
                for j in pool:
                    if not origin >> j & 1:
                        self.add(origin, j, per_arc)
        end = Fraction(1, comb(size, steps))
        return {mask_of(S): end for S in itertools.combinations(pool, steps)}

    def all_orders(self, origin: int, targets: Sequence[int], amount: Fraction) -> int:
        """Route ``amount`` from ``origin`` through every loading order of
        ``targets`` equally; returns the final vertex."""
        share = amount / factorial(len(targets))
        for order in itertools.permutations(targets):
            v = origin
            for j in order:
                self.add(v, j, share)
                v |= 1 << j
        return origin | mask_of(targets)

    def scale_existing(self, factors: dict[int, Fraction]) -> None:
        for a, fct in factors.items():
            self.values[a] *= fct

    def flow(self) -> Flow:
        vals = [Fraction(0)] * len(self.G.arcs)
        for a, v in self.values.items():
            vals[a] = v
        return Flow(self.x, vals)
