"""Route selection for rainbow matchings and the small-scale verification campaigns."""

from __future__ import annotations

import csv
import io
import itertools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from rainbow import kernels
from rainbow.absorption import absorbing_constant_bound
from rainbow.core import InputError, as_fraction
from rainbow.exact import (DEFAULT_NODE_CAP, Indeterminate, RainbowMatching, has_rainbow_matching,
                           restrict_matching)
from rainbow.extremal import ExtremalFailure, PreconditionError, close_case_solve
from rainbow.generators import (KFamily, build_F, build_H, closeness_to_extremal,
                                make_extremal_family, padding_colors, threshold)
from rainbow.rounding import Exponents, PipelineConfig, run_pipeline, stream

ROUTES = ("auto", "extremal", "pipeline", "exact")


@dataclass(frozen=True)
class SolveConfig:
    epsilon: float = 0.05
    alpha: float | None = None
    route: str = "auto"
    seed: int = 0
    fallback: bool = True
    fallback_max_edges: int = 10**5
    override: bool = False
    node_cap: int = DEFAULT_NODE_CAP
    pipeline: PipelineConfig | None = None

    def pipeline_config(self, n: int, k: int) -> PipelineConfig:
        if self.pipeline is not None:
            return self.pipeline
        # small hosts need a large sampling probability to see any edges
        p = min(1.0, max(0.3, 20.0 / n))
        return PipelineConfig(exponents=Exponents(probability=p, samples=10), lp_mode="exact"
                              if n <= 60 else "float", quota=max(3, math.ceil(0.05 * n / (k + 1)) + 1))


@dataclass
class RunReport:
    route: str | None
    status: str  # "found", "none", "precondition", "indeterminate"
    stages: list = field(default_factory=list)
    certificate: RainbowMatching | None = None
    timings: dict = field(default_factory=dict)
    seed: int = 0
    parameters: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_record(self, timings: bool = False) -> dict:
        rec = {
            "route": self.route,
            "status": self.status,
            "stages": self.stages,
            "certificate": None if self.certificate is None else [[v + 1 for v in e] for e in self.certificate.edges],
            "seed": self.seed,
            "parameters": self.parameters,
            "notes": self.notes,
        }
        if timings:
            rec["timings"] = self.timings
        return rec


def _frac(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def precondition(family: KFamily) -> dict:
    bound = threshold(family.n, family.k, family.t)
    low = [i + 1 for i, s in enumerate(family.sizes()) if s <= bound]
    return {"bound": bound, "sizes": family.sizes(), "violations": low, "ok": not low}


def _pipeline_route(family: KFamily, cfg: SolveConfig, report: RunReport):
    n, k, t = family.n, family.k, family.t
    H = build_H(family)
    pc = cfg.pipeline_config(n, k)
    rep = run_pipeline(H, pc, cfg.seed, t=t)
    rec = rep.to_record()
    report.stages.append({"stage": "pipeline", "matching_size": rec["matching_size"],
                          "uncovered": rec["uncovered"], "steps": rec["stages"]})
    want = padding_colors(n, k, t) + t
    if len(rep.matching) < want:
        raise ExtremalFailure("pipeline", None, rep.matching,
                              f"pipeline matching has {len(rep.matching)} edges, {want} needed")
    M = restrict_matching(rep.matching, family)
    return RainbowMatching.from_matching(M, t)


def solve_rainbow(family: KFamily, config: SolveConfig = SolveConfig()) -> RunReport:
    """Find a rainbow matching along the closeness-selected route.

    ``auto`` runs the extremal matcher when the graph is within ``epsilon``
    of the extremal graph and the absorption pipeline otherwise. A failed
    route falls back to the exact solver when enabled and the instance has at
    most ``fallback_max_edges`` edges.
    """
    if config.route not in ROUTES:
        raise InputError(f"unknown route {config.route!r}")
    n, k, t = family.n, family.k, family.t
    cfg = config
    report = RunReport(None, "indeterminate", seed=cfg.seed, parameters={
        "n": n, "k": k, "t": t, "epsilon": _frac(as_fraction(cfg.epsilon)), "route": cfg.route,
        "fallback": cfg.fallback, "library_constant_bound": absorbing_constant_bound(k)})
    clock = time.perf_counter
    start = clock()
    pre = precondition(family)
    report.stages.append({"stage": "precondition", **pre})
    if not pre["ok"] and not cfg.override:
        report.status = "precondition"
        return report
    if n <= 2 * k * t:
        report.notes.append("n <= 2kt: outside the regime of the main theorem")
    large = n > 3 * k * k * t
    if large:
        report.notes.append("n > 3k^2 t: no constructive route is given there, the exact solver is used")

    route = cfg.route
    close = None
    if route == "auto":
        if large:
            route = "exact"
        else:
            t0 = clock()
            close = closeness_to_extremal(build_F(family), t)
            report.timings["closeness"] = clock() - t0
            report.stages.append({"stage": "closeness", **close.to_record()})
            route = "extremal" if close.epsilon <= as_fraction(cfg.epsilon) else "pipeline"

    cert = None
    if route in ("extremal", "pipeline"):
        t0 = clock()
        try:
            if route == "extremal":
                res = close_case_solve(family, cfg.epsilon, cfg.alpha, check_threshold=False,
                                       check_closeness=False, node_cap=cfg.node_cap, seed=cfg.seed)
                report.stages.append({"stage": "extremal", "ok": True, "bad": len(res.goodness.bad),
                                      "b": res.b, "residual": list(res.residual),
                                      "rotations": len(res.extremal.firings)})
                cert = res.rainbow
            else:
                cert = _pipeline_route(family, cfg, report)
                report.stages.append({"stage": "assemble", "ok": True})
            report.route = route
        except (ExtremalFailure, PreconditionError, InputError) as exc:
            report.stages.append({"stage": route, "ok": False, "failure": getattr(exc, "stage", type(exc).__name__),
                                  "message": str(exc)})
        report.timings[route] = clock() - t0

    if cert is None and (route == "exact" or cfg.fallback):
        HF = build_F(family)
        if route != "exact" and len(HF) > cfg.fallback_max_edges:
            report.stages.append({"stage": "exact", "ok": False, "message": "instance above the fallback size"})
        else:
            t0 = clock()
            report.route = "exact" if route == "exact" else "exact-fallback"
            try:
                cert = has_rainbow_matching(family, node_cap=cfg.node_cap)
                report.stages.append({"stage": "exact", "ok": True, "exists": cert is not None})
                if cert is None:
                    report.status = "none"
            except Indeterminate as exc:
                report.stages.append({"stage": "exact", "ok": False, "message": str(exc)})
            report.timings["exact"] = clock() - t0

    if cert is not None:
        if not cert.is_valid_for(family):
            raise AssertionError("route produced an invalid rainbow matching")
        report.certificate = cert
        report.status = "found"
    report.timings["total"] = clock() - start
    return report


# ---------------------------------------------------------------------------
# campaigns
# ---------------------------------------------------------------------------

EXHAUSTIVE_LIMIT = 5 * 10**7
BATCH = 20_000


@dataclass
class CampaignRow:
    n: int
    k: int
    t: int
    bound: int
    samples: int
    failures: int
    route_stats: str
    regime: str = ""


@dataclass
class CampaignReport:
    rows: list
    counterexamples: list  # (n, families as 1-based edge lists)
    sharpness: dict  # (n) -> True when the extremal family has no rainbow matching

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "k", "t", "bound", "samples", "failures", "route-stats"])
        for r in self.rows:
            w.writerow([r.n, r.k, r.t, r.bound, r.samples, r.failures, r.route_stats])
        return buf.getvalue()

    def to_record(self) -> dict:
        return {"rows": [r.__dict__ for r in self.rows],
                "counterexamples": self.counterexamples,
                "sharpness": {str(k): v for k, v in self.sharpness.items()}}


def _all_ksets(n, k):
    return np.array(list(itertools.combinations(range(n), k)), np.int64).reshape(-1, k)


def _decide_batch(t, n, k, edge_idx, ksets, node_cap):
    """Rainbow decisions for ``B`` families given as ``(B, t, s)`` k-set indices."""
    B, _, s = edge_idx.shape
    bits = np.zeros(len(ksets), np.int64)
    for col in range(k):
        bits |= np.left_shift(np.int64(1), ksets[:, col] + t)
    masks = bits[edge_idx] | np.left_shift(np.int64(1), np.arange(t, dtype=np.int64))[None, :, None]
    masks3 = masks.reshape(B, t * s, 1)
    starts = np.concatenate([np.arange(t + 1) * s, np.full(n, t * s)]).astype(np.int64)
    sizes, exhausted = kernels.bb_batch(starts, masks3, t + n, k + 1, t, node_cap)
    if exhausted.any():
        raise Indeterminate("budget exhausted in the campaign")
    return sizes >= t


def _orbit_reps(n, k, s):
    """One k-graph with ``s`` edges from each relabeling class, as k-set index arrays."""
    ksets = _all_ksets(n, k)
    N = len(ksets)
    if N > 62:
        raise InputError("exhaustive orbit enumeration supports at most 62 k-sets")
    pos = {tuple(e): i for i, e in enumerate(ksets.tolist())}
    perm_bit = np.array([[pos[tuple(sorted(p[v] for v in e))] for e in ksets.tolist()]
                         for p in itertools.permutations(range(n))], np.int64)
    seen = set()
    reps = []
    for combo in itertools.combinations(range(N), s):
        mask = sum(1 << i for i in combo)
        if mask in seen:
            continue
        reps.append(combo)
        orbit = np.zeros(len(perm_bit), np.int64)
        for i in combo:
            orbit |= np.left_shift(np.int64(1), perm_bit[:, i])
        seen.update(int(m) for m in orbit)
    return reps


def exhaustive_size(n, k, t, s, reps=None) -> int:
    N = math.comb(n, k)
    first = len(reps) if reps is not None else math.comb(N, s)
    return first * math.comb(N, s) ** (t - 1)


def verify_conjecture(k: int, t: int, n_range, mode: str = "random", *, samples: int = 1000,
                      seed: int = 0, form: str = "max", node_cap: int = 10**6,
                      limit: int = EXHAUSTIVE_LIMIT) -> CampaignReport:
    """Decide every sampled (or every, up to relabeling) family just above the bound.

    Each member has exactly ``bound + 1`` edges. The extremal family is also
    decided at every point as a sharpness check.
    """
    rows, bad, sharp = [], [], {}
    for n in n_range:
        if n < k * t:
            continue
        bound = threshold(n, k, t, form)
        s = bound + 1
        ksets = _all_ksets(n, k)
        N = len(ksets)
        regime = "main-theorem" if n > 2 * k * t else "below-2kt"
        if t > 1:
            sharp[n] = has_rainbow_matching(make_extremal_family(n, k, t), node_cap=node_cap) is None
        else:
            sharp[n] = True
        if s > N:
            rows.append(CampaignRow(n, k, t, bound, 0, 0, "bound-exceeds-edges", regime))
            continue
        decided = fails = 0
        if mode == "random":
            for lo in range(0, samples, BATCH):
                B = min(BATCH, samples - lo)
                rng = stream(seed, n * 1_000_003 + lo, "campaign")
                idx = np.argsort(rng.random((B, t, N)), axis=2)[:, :, :s]
                idx = np.sort(idx, axis=2)
                ok = _decide_batch(t, n, k, idx, ksets, node_cap)
                decided += B
                for b in np.flatnonzero(~ok):
                    fails += 1
                    bad.append({"n": n, "families": [[[int(v) + 1 for v in ksets[j]] for j in idx[b, i]]
                                                     for i in range(t)]})
        elif mode == "exhaustive":
            if math.comb(N, s) > 10**6:
                raise InputError(f"exhaustive mode refused: {math.comb(N, s)} edge sets per member at n={n}")
            estimate = exhaustive_size(n, k, t, s)
            reps = _orbit_reps(n, k, s)
            size = exhaustive_size(n, k, t, s, reps)
            if size > limit:
                raise InputError(f"exhaustive mode refused at n={n}: {size} instances "
                                 f"(unreduced {estimate}), limit {limit}")
            others = list(itertools.combinations(range(N), s))
            for rep in reps:
                for lo in range(0, len(others) ** (t - 1), BATCH):
                    chunk = list(itertools.islice(itertools.product(others, repeat=t - 1), lo, lo + BATCH))
                    B = len(chunk)
                    idx = np.empty((B, t, s), np.int64)
                    idx[:, 0, :] = rep
                    if t > 1:
                        idx[:, 1:, :] = np.array(chunk, np.int64).reshape(B, t - 1, s)
                    ok = _decide_batch(t, n, k, idx, ksets, node_cap)
                    decided += B
                    for b in np.flatnonzero(~ok):
                        fails += 1
                        bad.append({"n": n, "families": [[[int(v) + 1 for v in ksets[j]] for j in idx[b, i]]
                                                         for i in range(t)]})
        else:
            raise InputError(f"unknown campaign mode {mode!r}")
        stats = f"exact:{decided};sharp:{'yes' if sharp[n] else 'no'};regime:{regime}"
        rows.append(CampaignRow(n, k, t, bound, decided, fails, stats, regime))
    return CampaignReport(rows, bad, sharp)
