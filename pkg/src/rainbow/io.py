"""Canonical JSON documents. Vertices are 1-based on disk and 0-based in memory."""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

import numpy as np

from rainbow.core import InputError, KGraph, Matching, PartiteHypergraph
from rainbow.generators import KFamily


def _plus1(e):
    return [int(v) + 1 for v in e]


def _minus1(e, where):
    out = []
    for v in e:
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise InputError(f"{where}: vertex {v!r} is not a positive integer")
        out.append(v - 1)
    return out


def family_record(family: KFamily) -> dict:
    return {"kind": "family", "n": family.n, "k": family.k, "t": family.t,
            "families": [[_plus1(e) for e in F.edges] for F in family.families]}


def partite_record(H: PartiteHypergraph) -> dict:
    return {"kind": "partite", "qSize": H.qsize, "vSize": H.vsize, "k": H.k,
            "edges": [_plus1(e) for e in H.edges]}


def kgraph_record(F: KGraph) -> dict:
    return {"kind": "kgraph", "n": F.n, "k": F.k, "edges": [_plus1(e) for e in F.edges]}


def matching_record(M: Matching) -> dict:
    return {"kind": "matching", "edges": [_plus1(e) for e in M.edges]}


def rainbow_record(R, family: KFamily | None = None) -> dict:
    rec = {"kind": "certificate", "edges": [_plus1(e) for e in R.edges]}
    if family is not None:
        rec.update(n=family.n, k=family.k, t=family.t)
    return rec


def parse(doc: dict):
    """Build the object a document describes: KFamily, PartiteHypergraph or KGraph."""
    if not isinstance(doc, dict):
        raise InputError("document must be a JSON object")
    kind = doc.get("kind") or ("family" if "families" in doc else "partite" if "qSize" in doc else None)
    try:
        if kind == "family":
            n, k, t = int(doc["n"]), int(doc["k"]), int(doc["t"])
            lists = doc["families"]
            if len(lists) != t:
                raise InputError(f"t={t} but {len(lists)} edge lists given")
            return KFamily.from_edge_lists(
                n, k, [[_minus1(e, f"F_{i + 1}") for e in L] for i, L in enumerate(lists)])
        if kind == "partite":
            return PartiteHypergraph(int(doc["qSize"]), int(doc["vSize"]), int(doc["k"]),
                                     [_minus1(e, "edge") for e in doc["edges"]])
        if kind == "kgraph":
            return KGraph(int(doc["n"]), int(doc["k"]), [_minus1(e, "edge") for e in doc["edges"]])
    except KeyError as exc:
        raise InputError(f"{kind} document is missing field {exc.args[0]!r}") from None
    raise InputError(f"unknown document kind {kind!r}")


def _default(x):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, (set, frozenset)):
        return sorted(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialise {type(x).__name__}")


def dumps(rec) -> str:
    """Deterministic rendering: sorted keys, two-space indent, trailing newline."""
    return json.dumps(rec, sort_keys=True, indent=2, default=_default) + "\n"


def write(path, rec) -> None:
    Path(path).write_text(dumps(rec))


def read(path):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from None
    return parse(doc)
