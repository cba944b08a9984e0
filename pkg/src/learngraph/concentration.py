"""Monte Carlo checks of the concentration statements: Azuma tails,
type-matrix deviation tails, mean types and key-flow ratios.

Randomness comes from numpy's Philox counter-based generator.  Trials are
drawn in fixed-size chunks and chunk ``c`` uses the stream
``Philox(seed).jumped(c)``, so results do not depend on ``jobs``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .errors import ConstructionError, InputError, SamplerError
from .kdist.alg1 import KeyVertexSampler, first_stage_flow, key_vertex_flow
from .kdist.counting import count_by_specification, exact_mean_type
from .kdist.params import StageParams
from .kdist.promise import PromisedInstance
from .symmetry import type_distance, type_of

CHUNK = 1 << 14


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed).jumped(chunk))


def run_chunks(seed: int, trials: int, work: Callable[[np.random.Generator, int], np.ndarray], jobs: int = 1) -> np.ndarray:
    """Concatenate ``work(rng_c, size_c)`` over the chunks of ``trials``."""
    if trials < 1:
        raise InputError("trials must be at least 1")
    sizes = [min(CHUNK, trials - s) for s in range(0, trials, CHUNK)]
    tasks = [(c, size) for c, size in enumerate(sizes)]
    call = lambda cs: work(chunk_rng(seed, cs[0]), cs[1])  # noqa: E731
    if jobs > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(call, tasks))
    else:
        parts = [call(t) for t in tasks]
    return np.concatenate(parts)


def azuma_bound(lam: float) -> float:
    """``exp(-lam^2 / 2)``."""
    if not lam > 0:
        raise InputError("lambda must be positive; the bound is trivial otherwise")
    return math.exp(-lam * lam / 2)


@dataclass
class TailReport:
    lambdas: np.ndarray
    empirical: np.ndarray
    bound: np.ndarray
    stderr: np.ndarray
    trials: int
    rate: float | None = None
    intercept: float | None = None
    r_squared: float | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.empirical) <= 0))

    def within_bound(self, sigmas: float = 3.0) -> bool:
        return bool(np.all(self.empirical <= self.bound + sigmas * self.stderr))

    def csv(self) -> str:
        lines = ["lambda,empirical,bound,stderr"]
        for row in zip(self.lambdas, self.empirical, self.bound, self.stderr):
            lines.append(",".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"

    def plot_script(self, data_file: str) -> str:
        return (
            "set datafile separator ','\n"
            "set logscale y\n"
            "set xlabel 'lambda'\n"
            "set ylabel 'exceedance'\n"
            f"plot '{data_file}' every ::1 using 1:2:4 with yerrorbars title 'empirical', \\\n"
            f"     '{data_file}' every ::1 using 1:3 with lines title 'bound'\n"
        )


def _exceedance(samples: np.ndarray, thresholds: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ordered = np.sort(samples)
    counts = len(ordered) - np.searchsorted(ordered, thresholds, side="right")
    p = counts / len(ordered)
    return p, np.sqrt(p * (1 - p) / len(ordered))


def martingale_tail_check(m: int, trials: int, seed: int, lambdas: Sequence[float] | None = None, jobs: int = 1) -> TailReport:
    """Empirical ``Pr[X_m > lam sqrt(m)]`` for the simple +-1 walk against
    ``exp(-lam^2/2)`` (reported as 1 at ``lam = 0``)."""
    if m < 1:
        raise InputError("m must be at least 1")
    lams = np.asarray(lambdas if lambdas is not None else np.arange(0, 4.01, 0.25), dtype=float)
    # X_m = 2 Bin(m, 1/2) - m is the endpoint of m independent +-1 steps
    endpoints = run_chunks(seed, trials, lambda rng, size: 2 * rng.binomial(m, 0.5, size) - m, jobs)
    emp, se = _exceedance(endpoints.astype(float), lams * math.sqrt(m))
    bound = np.array([1.0 if lam <= 0 else azuma_bound(lam) for lam in lams])
    return TailReport(lams, emp, bound, se, trials)


# --- type sampling ----------------------------------------------------------


class TypeSampler:
    """Vectorised uniform ``size``-subsets of ``A_{>=1}`` and their types."""

    def __init__(self, ell: Sequence[int]):
        self.ell = tuple(ell)
        k1 = len(self.ell)
        block, tup = [], []
        tid = 0
        for s, c in enumerate(self.ell, start=1):
            for _ in range(c):
                block.extend([s - 1] * s)
                tup.extend([tid] * s)
                tid += 1
        self.block = np.array(block, dtype=np.int64)
        self.tuple = np.array(tup, dtype=np.int64)
        self.tuples = tid
        self.tuple_block = np.zeros((tid, k1), dtype=np.int64)
        for t_id, b in zip(tup, block):
            self.tuple_block[t_id, b] = 1
        self.n1 = len(block)

    def types(self, rng: np.random.Generator, size: int, count: int) -> np.ndarray:
        """``count`` type matrices, shape ``(count, k-1, k-1)``."""
        if size > self.n1:
            raise InputError(f"cannot draw {size} of {self.n1} elements")
        keys = rng.random((count, self.n1))
        picks = np.argpartition(keys, size - 1, axis=1)[:, :size] if size else np.zeros((count, 0), dtype=np.int64)
        tids = self.tuple[picks]
        per = np.zeros((count, self.tuples), dtype=np.int64)
        rows = np.repeat(np.arange(count), size)
        np.add.at(per, (rows, tids.ravel()), 1)
        k1 = len(self.ell)
        out = np.zeros((count, k1, k1), dtype=np.int64)
        for t in range(1, k1 + 1):
            out[:, t - 1, :] = (per == t).astype(np.int64) @ self.tuple_block
        return out


@dataclass
class MeanTypeReport:
    mean: np.ndarray
    stderr: np.ndarray
    accepted: int
    drawn: int
    exact: tuple[tuple[Fraction, ...], ...] | None = None

    def agrees(self, sigmas: float = 3.0) -> bool:
        if self.exact is None:
            return True
        ex = np.array(self.exact, dtype=float)
        slack = sigmas * self.stderr + 1e-12
        return bool(np.all(np.abs(self.mean - ex) <= slack))


def sample_spec_types(ell, spec, trials: int, seed: int, max_draws: int | None = None) -> tuple[np.ndarray, int]:
    """Rejection sample ``trials`` types of uniform subsets satisfying ``spec``."""
    spec = tuple(spec) + (0,) * (len(ell) - len(spec))
    size = sum(t * c for t, c in enumerate(spec, start=1))
    sampler = TypeSampler(ell)
    rate = count_by_specification(ell, spec) / math.comb(sampler.n1, size)
    if rate == 0:
        raise SamplerError(f"specification {spec} is not satisfiable on the promise {tuple(ell)}")
    max_draws = max_draws or 200 * trials
    if trials / rate > max_draws:
        raise SamplerError(f"acceptance rate {rate:.2e} is too low for {trials} trials; try a smaller instance")
    target = np.array(spec)
    kept = []
    got = 0
    drawn = 0
    chunk = 0
    while got < trials:
        # fixed chunk layout keeps the stream independent of how many are kept
        rng = chunk_rng(seed, chunk)
        batch = sampler.types(rng, size, CHUNK)
        drawn += CHUNK
        chunk += 1
        ok = batch[np.all(batch.sum(axis=2) == target, axis=1)]
        kept.append(ok)
        got += len(ok)
        if drawn > max_draws and got < trials:
            raise SamplerError("rejection sampling exceeded its budget; try a smaller instance")
    return np.concatenate(kept)[:trials], drawn


def estimate_mean_type(ell, spec, trials: int, seed: int, exact_limit: int = 12) -> MeanTypeReport:
    """Monte Carlo mean type of uniform ``spec``-satisfying subsets of
    ``A_{>=1}``, with the exact mean attached when ``n' <= exact_limit``."""
    if not any(spec):
        k1 = len(ell)
        zero = np.zeros((k1, k1))
        return MeanTypeReport(zero, zero.copy(), trials, trials, tuple(tuple(Fraction(0) for _ in range(k1)) for _ in range(k1)))
    types, drawn = sample_spec_types(ell, spec, trials, seed)
    mean = types.mean(axis=0)
    se = types.std(axis=0, ddof=1) / math.sqrt(len(types)) if len(types) > 1 else np.zeros_like(mean)
    n1 = sum(t * c for t, c in enumerate(ell, start=1))
    exact = exact_mean_type(ell, spec) if n1 <= exact_limit else None
    return MeanTypeReport(mean, se, len(types), drawn, exact)


def fit_gaussian_tail(lams: np.ndarray, exceed: np.ndarray, scale: float, min_prob: float) -> tuple[float, float, float]:
    """Fit ``log p = c0 - a lam^2 / scale`` on points with ``p >= min_prob``;
    returns ``(a, c0, R^2)``."""
    keep = exceed >= min_prob
    if keep.sum() < 3:
        return float("nan"), float("nan"), float("nan")
    fit = stats.linregress(lams[keep] ** 2 / scale, np.log(exceed[keep]))
    return float(-fit.slope), float(fit.intercept), float(fit.rvalue**2)


def type_deviation_tail(
    ell,
    spec,
    trials: int,
    seed: int,
    lambdas: Sequence[float] | None = None,
    r1: int | None = None,
    min_events: int = 30,
) -> TailReport:
    """Exceedance of ``||type - mean||_inf`` against ``lam``, fitted to
    ``exp(-a lam^2 / r_1)``.  The mean is exact."""
    mean = np.array(exact_mean_type(ell, spec), dtype=float)
    types, _ = sample_spec_types(ell, spec, trials, seed)
    dev = np.abs(types - mean).max(axis=(1, 2))
    r1 = r1 or sum(t * c for t, c in enumerate(spec, start=1))
    lams = np.asarray(lambdas if lambdas is not None else np.arange(0, math.ceil(dev.max()) + 1.0, 0.5), dtype=float)
    emp, se = _exceedance(dev, lams)
    report = TailReport(lams, emp, np.full(len(lams), np.nan), se, trials)
    a, c0, r2 = fit_gaussian_tail(lams, emp, r1, min_events / trials)
    report.rate, report.intercept, report.r_squared = a, c0, r2
    thin = lams[(emp > 0) & (emp * trials < min_events)]
    if len(thin):
        report.notes.append(f"fewer than {min_events} exceedances from lambda = {thin[0]:g}; wide confidence")
    report.bound = np.exp(c0 - a * lams**2 / r1) if not math.isnan(a) else report.bound
    return report


# --- key-flow ratios --------------------------------------------------------


@dataclass
class FlowRatioReport:
    n: int
    r2: int
    samples: int
    pairs: int
    zero_distance_pairs: int
    zero_distance_exact: bool
    distances: np.ndarray
    log_ratios: np.ndarray
    fitted_c: float
    holdout_c: float
    envelope: dict[int, float]
    typical_band: float
    notes: list[str] = field(default_factory=list)

    @property
    def linear(self) -> bool:
        """Held-out pairs obey the envelope fitted on the calibration half
        (within a factor 2)."""
        return self.fitted_c > 0 and self.holdout_c <= 2 * self.fitted_c

    def csv(self) -> str:
        lines = ["d,max_log_ratio,bound"]
        for d in sorted(self.envelope):
            lines.append(f"{d},{self.envelope[d]!r},{self.fitted_c * d * self.r2 / self.n!r}")
        return "\n".join(lines) + "\n"


def key_flow_ratio_check(
    params: StageParams,
    inst: PromisedInstance,
    trials: int,
    seed: int,
    stage: int | None = None,
    round_: int | None = None,
    max_pairs: int = 200_000,
) -> FlowRatioReport:
    """Sample key vertices along the flow, evaluate their exact flows and
    relate same-specification log-ratios to type distance.

    ``c`` is fitted as the largest ``|log ratio| / (d r_2 / n)`` over one half
    of the pairs; the other half gives ``holdout_c``.  The typical band is
    the largest flow ratio among sampled vertices whose type lies within
    ``sqrt(r_1)`` of the sampled mean type.
    """
    if params.k < 3:
        raise InputError("key-vertex flows need k >= 3")
    stage = stage or params.k - 1
    round_ = round_ or (params.r[params.k - 2] if stage == params.k - 1 else params.r[stage - 1])
    rng = np.random.Generator(np.random.Philox(seed))
    sampler = KeyVertexSampler(params, inst)
    x = inst.positive
    p_o = first_stage_flow(params)
    cache: dict = {}
    specs, mats, logs = [], [], []
    dead = 0
    while len(specs) < trials:
        try:
            S = sampler.sample(rng, stage, round_)
        except ConstructionError:
            # the path ran out of fresh tuples; its flow never reaches this round
            dead += 1
            if dead > 20 * trials:
                raise SamplerError("almost every flow path dies before the requested round")
            continue
        T = type_of(S, x, inst.layout)
        if T.b not in cache:
            cache[T.b] = key_vertex_flow(params, T, stage, round_, p_o)
        p = cache[T.b]
        specs.append(T.spec.b)
        mats.append(T)
        logs.append(math.log(p.numerator) - math.log(p.denominator))
    logs = np.array(logs)
    groups: dict = {}
    for idx, sp in enumerate(specs):
        groups.setdefault(sp, []).append(idx)
    ds, lr, zero_exact, zero_pairs = [], [], True, 0
    for members in groups.values():
        for a_pos, a in enumerate(members):
            for b in members[a_pos + 1 :]:
                d = type_distance(mats[a], mats[b])
                if d == 0:
                    zero_pairs += 1
                    zero_exact &= cache[mats[a].b] == cache[mats[b].b]
                    continue
                ds.append(d)
                lr.append(abs(logs[a] - logs[b]))
                if len(ds) >= max_pairs:
                    break
    ds, lr = np.array(ds, dtype=float), np.array(lr)
    notes = [f"{dead} sampled paths ran out of fresh tuples and were discarded"] if dead else []
    scale = params.r[1] / params.n
    if len(ds) < 10:
        notes.append("too few same-specification pairs at positive distance")
        fitted = holdout = float("nan")
    else:
        order = np.random.Generator(np.random.Philox(seed + 1)).permutation(len(ds))
        calib, hold = order[: len(ds) // 2], order[len(ds) // 2 :]
        fitted = float(np.max(lr[calib] / (ds[calib] * scale)))
        holdout = float(np.max(lr[hold] / (ds[hold] * scale)))
    envelope = {int(d): float(lr[ds == d].max()) for d in np.unique(ds)} if len(ds) else {}
    mean = np.mean([m.as_array() for m in mats], axis=0)
    typical = [i for i, m in enumerate(mats) if np.abs(m.as_array() - mean).max() <= math.sqrt(params.r[0])]
    band = float(math.exp(max(logs[typical]) - min(logs[typical]))) if typical else float("nan")
    return FlowRatioReport(params.n, params.r[1], trials, len(ds), zero_pairs, zero_exact, ds, lr, fitted, holdout, envelope, band, notes)
