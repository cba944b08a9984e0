"""Log-log exponent fits of the class-collapsed complexity estimates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from ..errors import InputError
from .alg1 import alg1_collapsed, default_promise
from .baseline import baseline_collapsed
from .params import rho_exponents, round_size, stage_params


@dataclass
class ScalingFit:
    construction: str
    k: int
    ns: tuple[int, ...]
    values: tuple[float, ...]
    slope: float
    intercept: float
    r_squared: float
    residuals: tuple[float, ...]

    def csv(self) -> str:
        lines = ["n,value,residual"]
        lines += [f"{n},{v!r},{r!r}" for n, v, r in zip(self.ns, self.values, self.residuals)]
        return "\n".join(lines) + "\n"


def collapsed_value(construction: str, k: int, n: int) -> float:
    if construction == "baseline":
        return baseline_collapsed(k, n, round_size(n, rho_exponents(k)[0] * k / (k + 1))).C
    if construction == "alg1-collapsed":
        params = stage_params(k, n, default_promise(k, n), warn=False)
        return alg1_collapsed(params).table_estimate
    raise InputError(f"unknown construction {construction!r}")


def scaling_experiment(construction: str, k: int, ns: Sequence[int]) -> ScalingFit:
    ns = tuple(int(n) for n in ns)
    if len(set(ns)) < 5 or min(ns) < 2:
        raise InputError("need at least 5 distinct grid values n >= 2")
    values = tuple(collapsed_value(construction, k, n) for n in ns)
    lx, ly = np.log(ns), np.log(values)
    fit = stats.linregress(lx, ly)
    resid = ly - (fit.intercept + fit.slope * lx)
    return ScalingFit(construction, k, ns, values, float(fit.slope), float(fit.intercept), float(fit.rvalue**2), tuple(float(r) for r in resid))
