"""Command line entry point: ``rainbow <subcommand> ...``.

Human summaries go to stdout; machine reports and certificates go to the
files named by ``--report`` and ``--certificate``. Exit status is 0 on
success, 1 when the requested object does not exist or a route failed, 2 on
bad input.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from rainbow import io
from rainbow.absorption import AbsorptionFailure, absorb, build_library, partition_balanced
from rainbow.core import InputError, Matching, PartiteHypergraph
from rainbow.exact import Indeterminate, fractional_optimum, max_matching
from rainbow.extremal import ExtremalFailure, PreconditionError, close_case_solve
from rainbow.generators import (KFamily, build_F, closeness_to_extremal, complete_kgraph,
                                make_extremal_family, make_F_t, make_H_t, make_Hk, random_family)
from rainbow.harness import ROUTES, SolveConfig, solve_rainbow, verify_conjecture
from rainbow.rounding import Exponents, PipelineConfig, run_pipeline, stream, synthetic_host

CONSTRUCTIONS = ("hk", "complete", "extremal-family", "F_t", "H_t", "random-family",
                 "complete-partite", "synthetic")


def _out(path, rec):
    if path:
        io.write(path, rec)


def _frac(x) -> str:
    return f"{x.numerator}/{x.denominator}"


def _ints(text):
    return [int(x) for x in text.split(",") if x.strip()] if text else []


# ---------------------------------------------------------------------------


def cmd_gen(a):
    name = a.name
    if name == "hk":
        rec = io.kgraph_record(make_Hk(a.t, a.n, a.k))
    elif name == "complete":
        rec = io.kgraph_record(complete_kgraph(a.n, a.k))
    elif name == "extremal-family":
        rec = io.family_record(make_extremal_family(a.n, a.k, a.t))
    elif name == "F_t":
        rec = io.partite_record(make_F_t(a.k, a.n, a.t))
    elif name == "H_t":
        rec = io.partite_record(make_H_t(a.k, a.n, a.t))
    elif name == "random-family":
        if a.size is None:
            raise InputError("random-family needs --size")
        rng = stream(a.seed, 0, "gen")
        rec = io.family_record(random_family(a.n, a.k, a.t, [a.size] * a.t, rng))
    elif name == "complete-partite":
        q = a.q if a.q is not None else a.n // a.k
        H = PartiteHypergraph(q, a.n, a.k, rows=_complete_rows(q, a.n, a.k))
        rec = io.partite_record(H)
    elif name == "synthetic":
        if a.degree is None:
            raise InputError("synthetic needs --degree")
        rec = io.partite_record(synthetic_host(a.n, a.k, a.degree, a.seed))
    else:
        raise InputError(f"unknown construction {name!r}")
    if a.output:
        io.write(a.output, rec)
        print(f"wrote {name} to {a.output}")
    else:
        sys.stdout.write(io.dumps(rec))
    return 0


def _complete_rows(q, n, k):
    body = complete_kgraph(n, k).rows + q
    cols = np.repeat(np.arange(q, dtype=np.int64), len(body))
    return np.column_stack([cols, np.tile(body, (q, 1))])


def _as_partite(obj, t=None):
    if isinstance(obj, KFamily):
        return build_F(obj), obj.t
    if isinstance(obj, PartiteHypergraph):
        if t is None:
            raise InputError("a partite document needs --t")
        return obj, t
    raise InputError("expected a family or partite document")


def cmd_closeness(a):
    H, t = _as_partite(io.read(a.file), a.t)
    rep = closeness_to_extremal(H, t, exact=False if a.greedy else None)
    rec = rep.to_record()
    sys.stdout.write(io.dumps(rec))
    _out(a.report, rec)
    return 0


def cmd_solve(a):
    obj = io.read(a.file)
    if isinstance(obj, KFamily):
        cfg = SolveConfig(epsilon=a.epsilon, alpha=a.alpha, route=a.route, seed=a.seed,
                          fallback=not a.no_fallback, override=a.override, node_cap=a.node_cap)
        rep = solve_rainbow(obj, cfg)
        print(f"route: {rep.route}  status: {rep.status}")
        for note in rep.notes:
            print(f"note: {note}")
        if rep.certificate is not None:
            print("rainbow matching:", "  ".join(
                f"F_{i + 1}:{'{' + ','.join(str(v + 1) for v in e) + '}'}" for i, e in enumerate(rep.certificate.edges)))
            _out(a.certificate, io.rainbow_record(rep.certificate, obj))
        _out(a.report, rep.to_record(timings=a.timings))
        return 0 if rep.status == "found" else 1
    # plain hypergraph: matching number
    t0 = time.perf_counter()
    res = max_matching(obj, node_cap=a.node_cap)
    status = "exact" if not res.exhausted else "lower bound (budget exhausted)"
    print(f"nu = {res.size} ({status}, {res.nodes} nodes)")
    rec = {"kind": "solve", "nu": res.size, "status": res.status, "nodes": res.nodes,
           "matching": [[v + 1 for v in e] for e in res.matching.edges]}
    if a.timings:
        rec["timings"] = {"total": time.perf_counter() - t0}
    _out(a.certificate, io.matching_record(res.matching))
    _out(a.report, rec)
    return 0 if not res.exhausted else 1


def cmd_lp(a):
    obj = io.read(a.file)
    H = build_F(obj) if isinstance(obj, KFamily) else obj
    sol = fractional_optimum(H, mode=a.mode)
    sol.check(H)
    print(f"nu_f = {_frac(sol.matching_value)}  cover = {_frac(sol.cover_value)}"
          + ("" if sol.exact else f"  (float objective {sol.float_value!r})"))
    prim = sorted((e, w) for e, w in sol.edge_weights.items() if w)
    dual = sorted((v, w) for v, w in sol.vertex_weights.items() if w)
    if not a.quiet:
        print("primal:")
        for e, w in prim:
            print(f"  {_edge_name(H, e)} = {_frac(w)}")
        print("dual:")
        for v, w in dual:
            print(f"  {_vertex_name(H, v)} = {_frac(w)}")
    rec = {"kind": "lp", "mode": a.mode, "matching_value": _frac(sol.matching_value),
           "cover_value": _frac(sol.cover_value), "exact": sol.exact,
           "primal": [{"edge": [v + 1 for v in e], "weight": _frac(w)} for e, w in prim],
           "dual": [{"vertex": _vertex_name(H, v), "weight": _frac(w)} for v, w in dual]}
    _out(a.report, rec)
    return 0


def _edge_name(H, e):
    if isinstance(H, PartiteHypergraph):
        return f"c{e[0] + 1}:{{{','.join(str(v + 1) for v in e[1:])}}}"
    return "{" + ",".join(str(v + 1) for v in e) + "}"


def _vertex_name(H, v):
    if isinstance(H, PartiteHypergraph):
        return f"c{v + 1}" if v < H.qsize else f"v{v - H.qsize + 1}"
    return f"v{v + 1}"


def cmd_extremal_solve(a):
    fam = io.read(a.file)
    if not isinstance(fam, KFamily):
        raise InputError("extremal-solve needs a family document")
    rec = {"kind": "extremal-solve", "epsilon": a.epsilon, "alpha": a.alpha, "seed": a.seed}
    try:
        res = close_case_solve(fam, a.epsilon, a.alpha, seed=a.seed, node_cap=a.node_cap)
    except PreconditionError as exc:
        rec.update(ok=False, stage="precondition", message=str(exc))
    except ExtremalFailure as exc:
        rec.update(ok=False, stage=exc.stage, color=None if exc.color is None else exc.color + 1,
                   message=str(exc))
    else:
        rec.update(ok=True, bad=len(res.goodness.bad), b=res.b, rotations=len(res.extremal.firings),
                   closeness=res.closeness.to_record(), certificate=io.rainbow_record(res.rainbow, fam)["edges"])
        _out(a.certificate, io.rainbow_record(res.rainbow, fam))
    if rec["ok"]:
        print(f"rainbow matching found ({rec['rotations']} rotations, b={rec['b']})")
    else:
        print(f"failed at stage {rec['stage']}: {rec['message']}")
    _out(a.report, rec)
    return 0 if rec["ok"] else 1


def _host(a):
    if a.host:
        H = io.read(a.host)
        if not isinstance(H, PartiteHypergraph):
            raise InputError("host must be a partite document")
        return H
    if a.n is None:
        raise InputError("give --host or --n")
    if a.degree is not None:
        return synthetic_host(a.n, a.k, a.degree, a.seed)
    q = a.q if a.q is not None else a.n // a.k
    return PartiteHypergraph(q, a.n, a.k, rows=_complete_rows(q, a.n, a.k))


def cmd_absorb_demo(a):
    H = _host(a)
    lib = build_library(H, a.policy, quota=a.quota, seed=a.seed)
    span = lib.span
    if a.colors or a.ground:
        S = [c - 1 for c in _ints(a.colors)] + [H.qsize + v - 1 for v in _ints(a.ground)]
    else:
        rng = stream(a.seed, 1, "absorb-demo")
        cols = [c for c in H.Q if c not in span]
        grd = [v for v in H.V if v not in span]
        parts = min(a.parts, len(cols), len(grd) // H.k)
        S = sorted(rng.choice(cols, parts, replace=False).tolist()) + \
            sorted(rng.choice(grd, H.k * parts, replace=False).tolist())
    rec = {"kind": "absorb-demo", "library": len(lib), "seed": a.seed,
           "S": [_vertex_name(H, v) for v in sorted(S)]}
    try:
        res = absorb(lib, Matching((), 0), S)
    except AbsorptionFailure as exc:
        rec.update(ok=False, failed_part=[_vertex_name(H, v) for v in sorted(exc.R)])
        print(f"no unused absorbing set for part {rec['failed_part']}")
        _out(a.report, rec)
        return 1
    rec.update(ok=True, parts=len(partition_balanced(H, S)), matching=io.matching_record(res.matching)["edges"])
    print(f"absorbed {len(S)} vertices into a perfect matching of {len(res.matching)} edges")
    _out(a.certificate, io.matching_record(res.matching))
    _out(a.report, rec)
    return 0


def cmd_pipeline(a):
    H = _host(a)
    ex = Exponents(a.sampling_exp, a.count_exp, a.probability, a.samples)
    cfg = PipelineConfig(exponents=ex, bite=a.bite, lp_mode=a.lp_mode, quota=a.quota,
                         library=not a.no_library, extend=not a.no_extend)
    t0 = time.perf_counter()
    rep = run_pipeline(H, cfg, a.seed)
    rec = {"kind": "pipeline", "seed": a.seed, **rep.to_record()}
    if a.timings:
        rec["timings"] = {"total": time.perf_counter() - t0}
    print(f"matching {len(rep.matching)} edges, {rep.uncovered} of {H.nverts} vertices uncovered")
    _out(a.report, rec)
    _out(a.certificate, io.matching_record(rep.matching))
    return 0


def cmd_verify(a):
    rep = verify_conjecture(a.k, a.t, range(a.n_min, a.n_max + 1), a.mode, samples=a.samples,
                            seed=a.seed, form=a.form)
    table = rep.to_csv()
    if a.csv:
        with open(a.csv, "w") as fh:
            fh.write(table)
    sys.stdout.write(table)
    fails = sum(r.failures for r in rep.rows)
    sharp = all(rep.sharpness.values())
    print(f"counterexamples: {fails}; extremal family sharp at every n: {'yes' if sharp else 'no'}")
    _out(a.report, {"kind": "campaign", "k": a.k, "t": a.t, "mode": a.mode, "seed": a.seed, **rep.to_record()})
    return 0 if fails == 0 else 1


# ---------------------------------------------------------------------------


def _reports(p, certificate=True):
    p.add_argument("--report", help="write the machine report here")
    if certificate:
        p.add_argument("--certificate", help="write the certificate here")
    p.add_argument("--timings", action="store_true", help="include wall-clock timings in the report")


def _host_args(p):
    p.add_argument("--host", help="partite host document")
    p.add_argument("--n", type=int, help="ground size of a generated host")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--q", type=int, help="colour count of a complete host (default n // k)")
    p.add_argument("--degree", type=int, help="edges per colour of a synthetic random host")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rainbow", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("gen", help="emit a named construction")
    p.add_argument("name", choices=CONSTRUCTIONS)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--t", type=int, default=1)
    p.add_argument("--q", type=int)
    p.add_argument("--size", type=int, help="edges per member of a random family")
    p.add_argument("--degree", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("closeness", help="distance to the extremal graph")
    p.add_argument("file")
    p.add_argument("--t", type=int)
    p.add_argument("--greedy", action="store_true", help="greedy cover choice even for small n")
    p.add_argument("--report")
    p.set_defaults(func=cmd_closeness)

    p = sub.add_parser("solve", help="rainbow matching of a family, or matching number of a hypergraph")
    p.add_argument("file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--alpha", type=float)
    p.add_argument("--route", choices=ROUTES, default="auto")
    p.add_argument("--override", action="store_true", help="run even when the size bound fails")
    p.add_argument("--no-fallback", action="store_true")
    p.add_argument("--node-cap", type=int, default=10**8)
    _reports(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("lp", help="fractional matching number with primal and dual")
    p.add_argument("file")
    p.add_argument("--mode", choices=("exact", "float"), default="exact")
    p.add_argument("--quiet", action="store_true")
    p.add_argument("--report")
    p.set_defaults(func=cmd_lp)

    p = sub.add_parser("extremal-solve", help="constructive matcher for families near the extremal one")
    p.add_argument("file")
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--node-cap", type=int, default=10**8)
    _reports(p)
    p.set_defaults(func=cmd_extremal_solve)

    p = sub.add_parser("absorb-demo", help="build an absorbing library and absorb a balanced set")
    _host_args(p)
    p.add_argument("--colors", help="1-based colours of S, comma separated")
    p.add_argument("--ground", help="1-based ground vertices of S, comma separated")
    p.add_argument("--parts", type=int, default=3, help="random S with this many (k+1)-parts")
    p.add_argument("--quota", type=int, default=3)
    p.add_argument("--policy", choices=("engineered", "faithful"), default="engineered")
    p.add_argument("--seed", type=int, default=0)
    _reports(p)
    p.set_defaults(func=cmd_absorb_demo)

    p = sub.add_parser("pipeline", help="sampling, rounding, nibble and absorption on a host")
    _host_args(p)
    p.add_argument("--probability", type=float, help="sampling probability (overrides --sampling-exp)")
    p.add_argument("--samples", type=int, help="sample count (overrides --count-exp)")
    p.add_argument("--sampling-exp", type=float, default=0.9)
    p.add_argument("--count-exp", type=float, default=1.1)
    p.add_argument("--bite", type=float, default=0.1)
    p.add_argument("--lp-mode", choices=("exact", "float"), default="float")
    p.add_argument("--quota", type=int, default=3)
    p.add_argument("--no-library", action="store_true")
    p.add_argument("--no-extend", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    _reports(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("verify", help="campaign just above the size bound")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--n-min", type=int, required=True)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--mode", choices=("exhaustive", "random"), default="random")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--form", choices=("first", "max"), default="max")
    p.add_argument("--csv")
    p.add_argument("--report")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, Indeterminate) as exc:
        print(f"rainbow: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
