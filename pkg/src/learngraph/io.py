"""Line-oriented text formats for graphs, weights, flows and certificates.

Indices are written 1-based.  Every file starts with ``#`` provenance lines
that readers skip.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from . import __version__
from .adversary import CertificateBundle, certificate_lines
from .domain import InputPoint, format_input, parse_input, restrict
from .errors import InputError
from .flows import Flow
from .graph import LearningGraph, TableWeights, Weight, indices_of, mask_of


def provenance(command: str, config: Mapping[str, object], seed: int | None = None) -> list[str]:
    items = " ".join(f"{k}={v}" for k, v in sorted(config.items()))
    lines = [f"# learngraph {__version__} {command}", f"# config: {items}"]
    lines.append(f"# seed: {seed if seed is not None else '-'}")
    return lines


def format_value(v) -> str:
    if isinstance(v, Fraction):
        return str(v)
    return repr(float(v))


def parse_value(text: str):
    if "/" in text or text.lstrip("-").isdigit():
        return Fraction(text)
    return float(text)


def _label(mask: int) -> str:
    idx = indices_of(mask)
    return ",".join(str(i + 1) for i in idx) if idx else "-"


def _unlabel(text: str) -> int:
    if text == "-":
        return 0
    return mask_of(int(t) - 1 for t in text.split(","))


def _assignment(indices: Sequence[int], values: Sequence[int]) -> str:
    if not indices:
        return "-"
    return ",".join(f"{i + 1}={v}" for i, v in zip(indices, values))


def graph_lines(
    G: LearningGraph,
    w: Weight | None = None,
    inputs: Iterable[Sequence[int]] = (),
    flows: Mapping[InputPoint, Flow] | None = None,
) -> list[str]:
    """Structure, then weights on every assignment the inputs realise, then flows."""
    out = [f"lg n={G.n} depth={G.depth}"]
    out += [f"v {_label(v)}" for v in G.vertices]
    out += [f"a {_label(a.origin)} {a.loaded + 1}" for a in G.arcs]
    if w is not None:
        seen = set()
        for x in inputs:
            for arc in G.arcs:
                alpha = restrict(x, arc.indices)
                if (arc.id, alpha) in seen:
                    continue
                seen.add((arc.id, alpha))
                out.append(f"w {arc.id} {_assignment(arc.indices, alpha)} {format_value(w(arc, alpha))}")
    for x, p in (flows or {}).items():
        out.append(f"flow x={format_input(x)}")
        out += [f"p {a} {format_value(v)}" for a, v in enumerate(p.values) if v != 0]
    return out


def read_graph(lines: Iterable[str]) -> tuple[LearningGraph, TableWeights | None, dict[InputPoint, Flow]]:
    n = depth = None
    vertices: list[int] = []
    arcs: list[tuple[int, int]] = []
    table: dict = {}
    raw_flows: dict[InputPoint, dict[int, object]] = {}
    current = None
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        head, *rest = line.split()
        try:
            if head == "lg":
                kv = dict(item.split("=", 1) for item in rest)
                n, depth = int(kv["n"]), int(kv["depth"])
            elif head == "v":
                vertices.append(_unlabel(rest[0]))
            elif head == "a":
                arcs.append((_unlabel(rest[0]), int(rest[1]) - 1))
            elif head == "w":
                alpha = () if rest[1] == "-" else tuple(int(p.split("=")[1]) for p in rest[1].split(","))
                table[(int(rest[0]), alpha)] = parse_value(rest[2])
            elif head == "flow":
                current = parse_input(rest[0].split("=", 1)[1])
                raw_flows[current] = {}
            elif head == "p":
                if current is None:
                    raise InputError("flow value before any flow header")
                raw_flows[current][int(rest[0])] = parse_value(rest[1])
            else:
                raise InputError(f"unknown record {head!r}")
        except (KeyError, IndexError, ValueError) as exc:
            raise InputError(f"line {lineno}: malformed record {line!r}") from exc
    if n is None:
        raise InputError("missing 'lg' header")
    G = LearningGraph(n, depth, vertices, arcs)
    flows = {}
    for x, vals in raw_flows.items():
        exact = all(isinstance(v, Fraction) for v in vals.values())
        if exact:
            arr = [Fraction(0)] * len(G.arcs)
            for a, v in vals.items():
                arr[a] = v
        else:
            arr = np.zeros(len(G.arcs))
            for a, v in vals.items():
                arr[a] = float(v)
        flows[x] = Flow(x, arr)
    return G, (TableWeights(table) if table else None), flows


def write_lines(fh: TextIO, header: list[str], body: Iterable[str]) -> None:
    for line in header:
        fh.write(line + "\n")
    for line in body:
        fh.write(line + "\n")


def certificate_text(bundle: CertificateBundle) -> list[str]:
    return certificate_lines(bundle)


def csv_rows(header: str, rows: Iterable[Sequence[object]]) -> list[str]:
    return [header] + [",".join(str(c) for c in row) for row in rows]
