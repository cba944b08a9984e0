"""Command-line front end.

Options are ``key=value`` tokens after the subcommand plus a few global
flags.  Exit codes: 0 success, 2 validation failure, 3 infeasible
instance, 4 resource cap.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .adversary import rescale_balance
from .complexity import graph_complexity
from .domain import FunctionSpec, enumerate_inputs
from .errors import (
    ConditioningError,
    ConstructionError,
    DegenerateInstanceError,
    InfeasibleError,
    InputError,
    ResourceCapError,
    SamplerError,
    TransportUnsoundError,
)
from .graph import TableWeights, build_layered_graph
from .io import csv_rows, graph_lines, provenance, read_graph, write_lines
from .pipeline import Construction, alg1_construction, baseline_construction, certify, layered_construction, verify

log = logging.getLogger("learngraph")

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_CAP = 0, 2, 3, 4


class Options:
    """``key=value`` tokens; every key must be consumed."""

    def __init__(self, tokens: Sequence[str], allowed: set[str]):
        self.values: dict[str, str] = {}
        for tok in tokens:
            if "=" not in tok:
                raise InputError(f"expected key=value, got {tok!r}")
            key, val = tok.split("=", 1)
            if key not in allowed:
                raise InputError(f"unknown option {key!r}; allowed: {', '.join(sorted(allowed))}")
            self.values[key] = val

    def get(self, key: str, default=None, conv: Callable = str):
        if key not in self.values:
            return default
        try:
            return conv(self.values[key])
        except ValueError as exc:
            raise InputError(f"bad value for {key}: {self.values[key]!r}") from exc

    def require(self, key: str, conv: Callable = str):
        if key not in self.values:
            raise InputError(f"missing required option {key}=")
        return self.get(key, conv=conv)


def ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",") if t)


def floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t)


CONSTRUCTION_KEYS = {"construction", "k", "n", "m", "r", "l", "f", "depth", "weight", "layout"}


def make_construction(opts: Options, args) -> Construction:
    kind = opts.get("construction", "baseline")
    if kind == "baseline":
        k = opts.get("k", 2, int)
        n = opts.require("n", int)
        r = opts.get("r", None, int)
        return baseline_construction(k, n, opts.get("m", n, int), r, cap=args.cap_vertices)
    if kind == "alg1":
        k = opts.get("k", 3, int)
        return alg1_construction(k, opts.require("n", int), opts.require("l", ints), opts.get("r", None, ints), seed=opts.get("layout", 0, int), cap=args.cap_vertices)
    if kind == "layered":
        f = FunctionSpec.parse(opts.require("f"))
        return layered_construction(f, opts.get("depth", f.n, int), opts.get("weight", 1, Fraction))
    raise InputError(f"unknown construction {kind!r}")


def emit(args, name: str, header: list[str], body: list[str]) -> None:
    """Write an artifact under ``--out`` (or stdout when no directory is set)."""
    if args.out:
        path = Path(args.out)
        path.mkdir(parents=True, exist_ok=True)
        with open(path / name, "w") as fh:
            write_lines(fh, header, body)
        print(f"wrote {path / name}")
    else:
        write_lines(sys.stdout, header, body)


# --- subcommands ------------------------------------------------------------


def cmd_params(opts: Options, args) -> int:
    from .kdist.params import rho_exponents, stage_params

    k = opts.require("k", int)
    rho = rho_exponents(k)
    print(f"rho = {', '.join(str(v) for v in rho)}; exponent = {rho[1]}")
    if "n" in opts.values:
        n = opts.require("n", int)
        ell = opts.get("l", None, ints)
        if ell is None:
            from .kdist.alg1 import default_promise

            ell = default_promise(k, n)
        p = stage_params(k, n, ell, opts.get("r", None, ints))
        print(f"l = {','.join(map(str, p.ell))}")
        print(f"r = {','.join(map(str, p.r))}")
        print(f"caps = {', '.join(str(c) for c in p.caps) or '-'}")
        print(f"depth = {p.depth}")
    return EXIT_OK


def cmd_count(opts: Options, args) -> int:
    from .kdist.counting import count_by_specification

    print(count_by_specification(opts.require("l", ints), opts.require("spec", ints)))
    return EXIT_OK


def cmd_expect(opts: Options, args) -> int:
    from .kdist.counting import expected_subtuples

    ell = opts.require("l", ints)
    r = opts.require("r", int)
    ts = opts.get("t", None, ints) or tuple(range(1, len(ell) + 1))
    for t in ts:
        print(f"t={t}: {expected_subtuples(ell, r, t)}")
    return EXIT_OK


def cmd_build(opts: Options, args) -> int:
    c = make_construction(opts, args)
    header = provenance("build", c.config, args.seed)
    emit(args, "graph.lg", header, graph_lines(c.graph, c.weights, c.inputs, c.flows))
    return EXIT_OK


def cmd_complexity(opts: Options, args) -> int:
    path = opts.get("file")
    if path:
        with open(path) as fh:
            G, w, flows = read_graph(fh)
        f = FunctionSpec.parse(opts.require("f"))
        if w is None:
            raise InputError("graph file carries no weights")
        use = opts.get("flows", "file")
        inputs = None
        if opts.get("domain", "file") == "file" and flows:
            inputs = sorted({x for x in flows} | _negatives_in(w, G, f))
        rep = graph_complexity(G, w, f, inputs=inputs, flows=flows if (use == "file" and flows) else None, exact=args.exact, jobs=args.jobs)
    else:
        c = make_construction(opts, args)
        from .pipeline import complexity_of

        rep = complexity_of(c, exact=args.exact, jobs=args.jobs)
    print(rep.summary())
    return EXIT_OK


def _negatives_in(w: TableWeights, G, f: FunctionSpec) -> set:
    """Negatives the file's weight table realises completely (a file holds
    weights only for the assignments its inputs produce)."""
    out = set()
    for y in enumerate_inputs(f, "negative"):
        if all((a.id, tuple(y[i] for i in a.indices)) in w.table for a in G.arcs):
            out.add(y)
    return out


def cmd_certify(opts: Options, args) -> int:
    c = make_construction(opts, args)
    bundle, rep = certify(c, exact=args.exact, jobs=args.jobs)
    if opts.get("balance", "no") == "yes":
        from .adversary import balancing_constant

        bundle = rescale_balance(bundle, balancing_constant(bundle))
    from .io import certificate_text

    emit(args, "certificate.txt", provenance("certify", c.config, args.seed), certificate_text(bundle))
    print(f"objective = {bundle.objective!r}")
    print(f"complexity C = {rep.C!r}")
    return EXIT_OK


def cmd_verify(opts: Options, args) -> int:
    c = make_construction(opts, args)
    res = verify(c, exact=args.exact, jobs=args.jobs)
    rows = res.report.rows + (res.classes.rows if res.classes else [])
    body = csv_rows("x,y,sum,deviation", [tuple(f'"{v}"' if "," in v else v for v in row) for row in rows])
    emit(args, "verification.csv", provenance("verify", c.config, args.seed), body)
    print(f"pairs = {res.report.pairs + (res.classes.pairs if res.classes else 0)}")
    print(f"max deviation = {res.max_deviation!r}")
    if args.exact:
        print(f"exact = {res.exact_ok}")
    print(f"objective = {res.bundle.objective!r}")
    print(f"sqrt(N P) = {res.complexity.C!r}")
    ok = res.max_deviation <= args.tolerance and (res.exact_ok is not False)
    return EXIT_OK if ok else EXIT_INVALID


def cmd_scaling(opts: Options, args) -> int:
    from .kdist.scaling import scaling_experiment

    construction = opts.get("construction", "baseline")
    k = opts.get("k", 2, int)
    ns = opts.get("ns", None, ints) or tuple(2**e for e in range(opts.get("emin", 6, int), opts.get("emax", 14, int) + 1))
    fit = scaling_experiment(construction, k, ns)
    cfg = {"construction": construction, "k": k, "ns": ",".join(map(str, ns))}
    emit(args, "scaling.csv", provenance("scaling", cfg, None), fit.csv().splitlines())
    print(f"slope = {fit.slope!r}")
    print(f"R^2 = {fit.r_squared!r}")
    return EXIT_OK


def cmd_mc_tail(opts: Options, args) -> int:
    from .concentration import martingale_tail_check, type_deviation_tail

    kind = opts.get("kind", "azuma")
    trials = args.trials or 100_000
    lams = opts.get("lambdas", None, floats)
    if kind == "azuma":
        m = opts.get("m", 100, int)
        rep = martingale_tail_check(m, trials, args.seed, lams, jobs=args.jobs)
        cfg = {"kind": kind, "m": m, "trials": trials}
        verdict = rep.within_bound()
    elif kind == "type":
        ell = opts.require("l", ints)
        spec = opts.require("spec", ints)
        rep = type_deviation_tail(ell, spec, trials, args.seed, lams, r1=opts.get("r1", None, int))
        cfg = {"kind": kind, "l": ",".join(map(str, ell)), "spec": ",".join(map(str, spec)), "trials": trials}
        verdict = rep.monotone and rep.rate is not None and rep.rate > 0
        print(f"rate = {rep.rate!r}; R^2 = {rep.r_squared!r}")
    else:
        raise InputError(f"unknown tail kind {kind!r}")
    emit(args, "tail.csv", provenance("mc-tail", cfg, args.seed), rep.csv().splitlines())
    if args.out:
        emit(args, "tail.gp", ["# gnuplot script for tail.csv"], rep.plot_script("tail.csv").splitlines())
    for note in rep.notes:
        print(f"note: {note}")
    print(f"monotone = {rep.monotone}; verdict = {'pass' if verdict else 'fail'}")
    return EXIT_OK if verdict else EXIT_INVALID


def cmd_flow_ratio(opts: Options, args) -> int:
    from .concentration import key_flow_ratio_check
    from .kdist.params import stage_params
    from .kdist.promise import build_promised_instance

    k = opts.get("k", 3, int)
    n = opts.get("n", 60, int)
    ell = opts.get("l", (19, 19), ints)
    params = stage_params(k, n, ell, opts.get("r", None, ints), warn=False)
    inst = build_promised_instance(k, n, ell, seed=opts.get("layout", 0, int))
    trials = args.trials or 2000
    rep = key_flow_ratio_check(params, inst, trials, args.seed)
    cfg = {"k": k, "n": n, "l": ",".join(map(str, ell)), "r": ",".join(map(str, params.r)), "trials": trials}
    emit(args, "flow_ratio.csv", provenance("flow-ratio", cfg, args.seed), rep.csv().splitlines())
    for note in rep.notes:
        print(f"note: {note}")
    print(f"pairs = {rep.pairs}; zero-distance pairs = {rep.zero_distance_pairs} (equal: {rep.zero_distance_exact})")
    print(f"fitted c = {rep.fitted_c!r}; held-out c = {rep.holdout_c!r}")
    print(f"typical band = {rep.typical_band!r}")
    ok = rep.zero_distance_exact and rep.linear
    print(f"verdict = {'pass' if ok else 'fail'}")
    return EXIT_OK if ok else EXIT_INVALID


def cmd_symmetrize(opts: Options, args) -> int:
    from .flows import optimal_flow
    from .symmetry import symmetrize

    f = FunctionSpec.parse(opts.require("f"))
    depth = opts.get("depth", f.n, int)
    G = build_layered_graph(f.n, depth)
    rng = np.random.Generator(np.random.Philox(args.seed))
    inputs = list(enumerate_inputs(f, "all"))
    table = {}
    for x in inputs:
        for a in G.arcs:
            key = (a.id, tuple(x[i] for i in a.indices))
            if key not in table:
                table[key] = Fraction(int(rng.integers(1, 10)), int(rng.integers(1, 10)))
    w = TableWeights(table)
    before = graph_complexity(G, w, f, exact=args.exact)
    group = opts.get("group", "full")
    w2, flows2 = symmetrize(G, w, before.flows, f, group=group, samples=opts.get("samples", 64, int), seed=args.seed)
    after = graph_complexity(G, w2, f, flows=flows2, exact=args.exact)
    print(f"C before = {float(before.C)!r}")
    print(f"C after  = {float(after.C)!r}")
    ok = after.C <= before.C + (0 if args.exact else args.tolerance)
    print(f"non-increasing = {ok}")
    return EXIT_OK if ok else EXIT_INVALID


COMMANDS = {
    "params": (cmd_params, {"k", "n", "l", "r"}),
    "count": (cmd_count, {"l", "spec"}),
    "expect": (cmd_expect, {"l", "r", "t"}),
    "build": (cmd_build, CONSTRUCTION_KEYS),
    "complexity": (cmd_complexity, CONSTRUCTION_KEYS | {"file", "flows", "domain"}),
    "certify": (cmd_certify, CONSTRUCTION_KEYS | {"balance"}),
    "verify": (cmd_verify, CONSTRUCTION_KEYS),
    "scaling": (cmd_scaling, {"construction", "k", "ns", "emin", "emax"}),
    "mc-tail": (cmd_mc_tail, {"kind", "m", "l", "spec", "lambdas", "r1"}),
    "flow-ratio": (cmd_flow_ratio, {"k", "n", "l", "r", "layout"}),
    "symmetrize": (cmd_symmetrize, {"f", "depth", "group", "samples"}),
}


def parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="learngraph", description="Learning graphs, adversary certificates and k-distinctness experiments.")
    p.add_argument("--version", action="version", version=f"learngraph {__version__}")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p.add_argument("--trials", type=int, default=None, help="Monte Carlo trials")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="concurrent independent tasks")
    p.add_argument("--cap-vertices", type=int, default=2_000_000, help="vertex and enumeration cap")
    p.add_argument("--tolerance", type=float, default=1e-9, help="feasibility tolerance")
    p.add_argument("--exact", action="store_true", help="use exact rational arithmetic")
    p.add_argument("--out", default=None, help="directory for artifacts (default: stdout)")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("options", nargs="*", help="key=value options")
    return p


def run(argv: Sequence[str] | None = None) -> int:
    args = parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    handler, allowed = COMMANDS[args.command]
    try:
        opts = Options(args.options, allowed)
        resolved = {**vars(args), **opts.values}
        resolved.pop("options", None)
        log.info("config: %s", " ".join(f"{k}={v}" for k, v in sorted(resolved.items())))
        return handler(opts, args)
    except (InputError, SamplerError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP if isinstance(exc, SamplerError) else EXIT_INVALID
    except (InfeasibleError, DegenerateInstanceError, ConditioningError, ConstructionError, TransportUnsoundError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
