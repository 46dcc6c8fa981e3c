"""Random samples, per-sample fractional perfect matchings, rounding and the nibble.

Every random draw derives its own Philox stream from ``(seed, index, tag)``,
so results do not depend on the order in which samples are processed.
"""

from __future__ import annotations

import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from rainbow.core import InputError, Matching, PartiteHypergraph, induced
from rainbow.exact import (CLOSURE_MAX_CANDIDATES, FractionalSolution, closure_graph,
                           fractional_optimum, max_matching)


def stream(seed: int, index: int, tag: str) -> np.random.Generator:
    """Counter-based generator for one ``(seed, index, purpose)`` path."""
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), int(index), zlib.crc32(tag.encode())])
    return np.random.Generator(np.random.Philox(ss))


# ---------------------------------------------------------------------------
# synthetic hosts
# ---------------------------------------------------------------------------


def random_ksets(n: int, k: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` distinct sorted k-subsets of ``range(n)``, uniformly at random."""
    total = math.comb(n, k)
    if count > total:
        raise InputError(f"cannot draw {count} distinct {k}-sets from {n} points")
    if total <= 4 * count or total < 10**5:
        from itertools import combinations
        allk = np.array(list(combinations(range(n), k)), np.int64).reshape(-1, k)
        return allk[np.sort(rng.choice(total, size=count, replace=False))]
    got = np.zeros((0, k), np.int64)
    while len(got) < count:
        draw = np.sort(rng.integers(0, n, size=(2 * (count - len(got)) + 8, k)), axis=1)
        if k > 1:
            draw = draw[(draw[:, 1:] != draw[:, :-1]).all(axis=1)]
        got = np.unique(np.vstack([got, draw]), axis=0)
    keep = np.sort(rng.choice(len(got), size=count, replace=False))
    return got[keep]


def synthetic_host(n: int, k: int, degree: int, seed: int = 0, complete_colors: int = 0) -> PartiteHypergraph:
    """Balanced host with ``n // k`` colours, each joined to ``degree`` random k-sets.

    The last ``complete_colors`` colours get every k-set instead.
    """
    q = n // k
    parts = []
    for c in range(q):
        if c >= q - complete_colors:
            from itertools import combinations
            bodies = np.array(list(combinations(range(n), k)), np.int64)
        else:
            bodies = random_ksets(n, k, degree, stream(seed, c, "host"))
        parts.append(np.column_stack([np.full(len(bodies), c), bodies + q]))
    rows = np.vstack(parts) if parts else np.zeros((0, k + 1), np.int64)
    return PartiteHypergraph(q, n, k, rows=rows, balanced=(n == k * q))


# ---------------------------------------------------------------------------
# samples
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Exponents:
    """Sampling schedule; ``probability``/``samples`` override the exponent forms."""

    sampling: float = 0.9
    count: float = 1.1
    probability: float | None = None
    samples: int | None = None

    def p(self, n: int) -> float:
        return self.probability if self.probability is not None else n ** (-self.sampling)

    def how_many(self, n: int) -> int:
        return self.samples if self.samples is not None else math.ceil(n ** self.count)


@dataclass
class SampleBatch:
    samples: list  # sorted global ids of each retained sample
    removed: list  # ids trimmed to restore balance
    exponents: Exponents
    seed: int
    p: float
    per_vertex_target: float
    report: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.samples)


def _gbinom(x: float, k: int) -> float:
    """Binomial coefficient for real ``x`` (0 below ``k - 1``)."""
    if x < k - 1:
        return 0.0
    out = 1.0
    for i in range(k):
        out *= (x - i) / (i + 1)
    return max(out, 0.0)


def draw_samples(H: PartiteHypergraph, exponents: Exponents = Exponents(), seed: int = 0, *,
                 subsets: dict | None = None, m: int | None = None, t: int | None = None,
                 rho: float = 0.0) -> SampleBatch:
    """Independent vertex samples trimmed to balanced sets, with empirical checks.

    ``subsets`` names vertex sets for the proportion check (vi); ``m`` and
    ``t`` feed the two forms of the degree check (v).
    """
    n = H.vsize
    p = exponents.p(n)
    if not 0 < p <= 1:
        raise InputError(f"sampling probability {p} outside (0, 1]")
    N = exponents.how_many(n)
    verts = np.array(sorted(H.vertices), np.int64)
    k = H.k
    samples, removed = [], []
    for i in range(N):
        rng = stream(seed, i, "sample")
        pick = verts[rng.random(len(verts)) < p]
        cols = pick[pick < H.qsize]
        grd = pick[pick >= H.qsize]
        keep_c = min(len(cols), len(grd) // k)
        drop_c = rng.permutation(len(cols))[: len(cols) - keep_c]
        drop_g = rng.permutation(len(grd))[: len(grd) - k * keep_c]
        gone = np.sort(np.concatenate([cols[drop_c], grd[drop_g]]))
        samples.append(np.setdiff1d(pick, gone))
        removed.append(gone)
    if all(len(s) == 0 for s in samples):
        raise InputError(f"every sample is empty at n={n}; raise the probability or lower the exponent")
    batch = SampleBatch(samples, removed, exponents, seed, p, N * p)
    batch.report = sample_report(H, batch, subsets=subsets, m=m, t=t, rho=rho)
    return batch


def _pair_max(samples) -> int:
    keys = []
    for s in samples:
        if len(s) > 1:
            a, b = np.triu_indices(len(s), 1)
            keys.append(s[a] * np.int64(1 << 32) + s[b])
    if not keys:
        return 0
    _, counts = np.unique(np.concatenate(keys), return_counts=True)
    return int(counts.max())


def edge_multiplicity(H: PartiteHypergraph, samples) -> np.ndarray:
    mult = np.zeros(len(H), np.int64)
    for s in samples:
        inside = np.zeros(H.nverts, bool)
        inside[s] = True
        mult += inside[H.rows].all(axis=1)
    return mult


def sample_report(H, batch: SampleBatch, *, subsets=None, m=None, t=None, rho=0.0) -> dict:
    n, k, p = H.vsize, H.k, batch.p
    S = batch.samples
    rep = {}
    Y = np.zeros(H.nverts, np.int64)
    for s in S:
        Y[s] += 1
    Yv = Y[sorted(H.vertices)]
    target = batch.per_vertex_target
    tol = n ** (-0.01)
    within = np.abs(Yv - target) <= tol * target
    rep["i_vertex_multiplicity"] = {"target": float(target), "min": int(Yv.min()), "max": int(Yv.max()),
                                    "rate": float(within.mean()), "pass": bool(within.all())}
    pm = _pair_max(S)
    rep["ii_pair_multiplicity"] = {"max": pm, "pass": pm <= 2}
    em = int(edge_multiplicity(H, S).max()) if len(H) else 0
    rep["iii_edge_multiplicity"] = {"max": em, "pass": em <= 1}
    qa = np.array([int((s < H.qsize).sum()) for s in S])
    qb = np.array([int((s >= H.qsize).sum()) for s in S])
    ea, eb = p * len(H.Q), p * len(H.V)
    dev = n ** 0.06
    ok_iv = (np.abs(qa - ea) <= dev) & (np.abs(qb - eb) <= dev)
    rep["iv_class_sizes"] = {"expected": [ea, eb], "mean": [float(qa.mean()), float(qb.mean())],
                             "rate": float(ok_iv.mean()), "pass": bool(ok_iv.all())}
    forms = {}
    for name, mm in (("m", m), ("t-1", None if t is None else t - 1)):
        if mm is None:
            continue
        passed = total = 0
        for s, b in zip(S, qb):
            floor = _gbinom(b, k) - _gbinom(b - mm * p, k) - 3 * rho * b**k
            inside = np.zeros(H.nverts, bool)
            inside[s] = True
            rows = H.rows[inside[H.rows].all(axis=1)]
            deg = np.bincount(rows[:, 0], minlength=H.qsize)
            for c in s[s < H.qsize]:
                total += 1
                passed += int(deg[c] > floor)
        forms[name] = {"rate": passed / total if total else 1.0, "pass": bool(passed == total)}
    rep["v_sample_degrees"] = forms
    props = {}
    for name, A in (subsets or {}).items():
        A = np.asarray(sorted(A), np.int64)
        sizes = np.array([np.isin(s, A).sum() for s in S])
        ok = np.abs(sizes - len(A) * p) <= dev
        props[name] = {"expected": float(len(A) * p), "rate": float(ok.mean()), "pass": bool(ok.all())}
    rep["vi_subset_proportions"] = props
    return rep


# ---------------------------------------------------------------------------
# fractional perfect matchings on samples
# ---------------------------------------------------------------------------


FLOAT_TOL = 1e-9


@dataclass
class SampleSolution:
    solution: FractionalSolution | None
    perfect: bool
    route: str  # "closure", "lp" or "none"
    reason: str = ""
    checks: dict = field(default_factory=dict)


def _stable_greedy(CL: PartiteHypergraph, q: int):
    """Greedy perfect matching trying colours with the smallest neighbourhoods first."""
    deg = np.bincount(CL.colors, minlength=CL.qsize) if len(CL) else np.zeros(CL.qsize, int)
    cols = sorted(CL.Q, key=lambda c: (deg[c], c))
    used = np.zeros(CL.nverts, bool)
    out = []
    for c in cols:
        cand = CL.rows[CL.rows[:, 0] == c]
        ok = np.flatnonzero(~used[cand].any(axis=1)) if len(cand) else []
        if len(ok) == 0:
            return None
        row = cand[ok[0]]
        used[row] = True
        out.append(CL.native(row))
    return out if len(out) == q else None


def sample_fractional_pm(H: PartiteHypergraph, R, *, mode: str = "exact", closure: str = "auto",
                         degree_floor: float | None = None, node_cap: int = 10**6) -> SampleSolution:
    """A fractional perfect matching of ``H[R]``.

    Solves the cover LP, then (when small enough) looks for a perfect matching
    of the closure graph, greedily along the neighbourhood-size order and with
    the exact solver as fallback. A closure matching made of edges of ``H`` is
    returned as an integral solution; otherwise the LP optimum is returned when
    it is perfect.
    """
    if closure not in ("auto", "always", "never"):
        raise InputError(f"unknown closure policy {closure!r}")
    R = frozenset(int(v) for v in R)
    sub = induced(H, R)
    q = len(sub.Q)
    checks = {}
    if len(sub.V) != H.k * q:
        return SampleSolution(None, False, "none", "sample is not balanced", checks)
    if q == 0:
        return SampleSolution(FractionalSolution({}, {}, Fraction(0), Fraction(0)), True, "lp", "", checks)
    deg = np.bincount(sub.colors, minlength=H.qsize) if len(sub) else np.zeros(H.qsize, int)
    if degree_floor is not None:
        low = [c for c in sorted(sub.Q) if deg[c] < degree_floor]
        checks["degree_floor"] = {"floor": degree_floor, "violations": len(low)}
        if low:
            return SampleSolution(None, False, "none", f"colour {low[0]} below the degree floor", checks)
    lp_sol = fractional_optimum(sub, mode=mode)
    checks["nu_f"] = str(lp_sol.matching_value)
    checks["cover"] = str(lp_sol.cover_value)
    want = Fraction(q)
    ncand = q * math.comb(len(sub.V), H.k)
    use_cl = closure == "always" or (closure == "auto" and ncand <= CLOSURE_MAX_CANDIDATES // 10)
    if use_cl and lp_sol.cover_value >= want:
        CL = closure_graph(sub, lp_sol.vertex_weights)
        pm = _stable_greedy(CL, q)
        if pm is None:
            res = max_matching(CL, target=q, node_cap=node_cap)
            pm = list(res.matching.edges) if res.size == q else None
        checks["closure_edges"] = len(CL)
        if pm is not None and all(e in sub for e in pm):
            ones = {tuple(e): Fraction(1) for e in pm}
            sol = FractionalSolution(ones, dict(lp_sol.vertex_weights), want, lp_sol.cover_value,
                                     exact=lp_sol.cover_value == want)
            sol.check(sub)
            return SampleSolution(sol, True, "closure", "", checks)
    if lp_sol.matching_value == want:
        return SampleSolution(lp_sol, True, "lp", "", checks)
    if lp_sol.float_value is not None and abs(lp_sol.float_value - q) <= FLOAT_TOL * q:
        # float mode: perfect up to the solver tolerance, weights rounded down onto a grid
        checks["float_value"] = lp_sol.float_value
        return SampleSolution(lp_sol, True, "lp", "perfect within float tolerance", checks)
    return SampleSolution(lp_sol, False, "lp", f"fractional optimum {lp_sol.matching_value} below {q}", checks)


# ---------------------------------------------------------------------------
# rounding and the nibble
# ---------------------------------------------------------------------------


@dataclass
class SparseSubgraph:
    host: PartiteHypergraph
    rows: np.ndarray  # selected edges, global ids, sorted
    degrees: np.ndarray  # per global vertex
    report: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.rows)

    def as_hypergraph(self) -> PartiteHypergraph:
        return self.host.with_rows(self.rows)


def ownership(H: PartiteHypergraph, samples) -> np.ndarray:
    """Owner sample of every edge of ``H`` (lowest index containing it, -1 if none)."""
    owner = np.full(len(H), -1, np.int64)
    for i, s in enumerate(samples):
        inside = np.zeros(H.nverts, bool)
        inside[s] = True
        hit = inside[H.rows].all(axis=1) & (owner < 0)
        owner[hit] = i
    return owner


def round_to_sparse(H: PartiteHypergraph, batch: SampleBatch, solutions, seed: int = 0) -> SparseSubgraph:
    """Keep each owned edge independently with its owner's fractional weight."""
    owner = ownership(H, batch.samples)
    keys = H.keys
    chosen = np.zeros(len(H), bool)
    for i, sol in enumerate(solutions):
        if sol is None or not sol.edge_weights:
            continue
        rows = np.array([H.global_row(e) for e in sorted(sol.edge_weights)], np.int64)
        weights = [sol.edge_weights[e] for e in sorted(sol.edge_weights)]
        pos = np.searchsorted(keys, H.row_keys(rows))
        rng = stream(seed, i, "round")
        u = rng.random(len(rows))
        for j, (w, r) in enumerate(zip(weights, pos)):
            if owner[r] == i and u[j] < float(w):
                chosen[r] = True
    rows = H.rows[chosen]
    deg = np.bincount(rows.ravel(), minlength=H.nverts) if len(rows) else np.zeros(H.nverts, np.int64)
    return SparseSubgraph(H, rows, deg, sparse_report(H, rows, deg, batch))


def _pair_degree_max(rows) -> int:
    if len(rows) == 0:
        return 0
    keys = []
    a = rows.shape[1]
    for i in range(a):
        for j in range(i + 1, a):
            keys.append(rows[:, i] * np.int64(1 << 32) + rows[:, j])
    _, counts = np.unique(np.concatenate(keys), return_counts=True)
    return int(counts.max())


def sparse_report(H, rows, deg, batch: SampleBatch | None) -> dict:
    n = H.vsize
    verts = np.array(sorted(H.vertices), np.int64)
    d = deg[verts]
    literal = n ** 0.2
    scaled = batch.per_vertex_target if batch is not None else float(d.mean()) if len(d) else 0.0
    out = {"edges": int(len(rows)), "max_degree": int(d.max()) if len(d) else 0,
           "mean_degree": float(d.mean()) if len(d) else 0.0, "max_pair_degree": _pair_degree_max(rows)}
    for name, D in (("literal", literal), ("scaled", scaled)):
        tol = n ** (-0.01)
        near = np.abs(d - D) <= tol * D
        out[name] = {
            "D": float(D),
            "1_near_regular_rate": float(near.mean()) if len(d) else 1.0,
            "2_max_below_2D": bool(d.max() < 2 * D) if len(d) else True,
            "3_pair_below": bool(out["max_pair_degree"] < n ** 0.19),
        }
    return out


@dataclass
class NibbleResult:
    matching: Matching
    uncovered: int
    rounds: int
    bites: list  # edges gained per round


def nibble_cover(Hp: SparseSubgraph, bite: float = 0.1, seed: int = 0, max_rounds: int = 10_000) -> NibbleResult:
    """Near-perfect matching of the sparse subgraph by repeated random bites.

    Each round every still-available edge is picked with probability
    ``bite / D`` (``D`` the mean available degree); picks are kept in random
    order unless they clash with an earlier keep. Rounds stop once a round
    keeps nothing twice in a row, and a greedy pass then makes the matching
    maximal in ``H'``.
    """
    H = Hp.host
    rows = Hp.rows
    covered = np.zeros(H.nverts, bool)
    kept = []
    bites = []
    idle = 0
    rounds = 0
    while rounds < max_rounds and len(rows):
        avail_sel = ~covered[rows].any(axis=1)
        avail = rows[avail_sel]
        if len(avail) == 0:
            break
        rounds += 1
        deg = np.bincount(avail.ravel(), minlength=H.nverts)
        D = deg[deg > 0].mean()
        rng = stream(seed, rounds, "nibble")
        pick = np.flatnonzero(rng.random(len(avail)) < min(1.0, bite / D))
        gained = 0
        for j in rng.permutation(pick):
            e = avail[j]
            if not covered[e].any():
                covered[e] = True
                kept.append(e)
                gained += 1
        bites.append(gained)
        idle = idle + 1 if gained == 0 else 0
        if idle >= 2:
            break
    for e in rows:
        if not covered[e].any():
            covered[e] = True
            kept.append(e)
    M = Matching.of(H, [H.native(e) for e in kept])
    uncovered = len(H.vertices) - int(covered[sorted(H.vertices)].sum())
    return NibbleResult(M, uncovered, rounds, bites)


def is_maximal(rows: np.ndarray, M: Matching, nverts: int) -> bool:
    covered = np.zeros(nverts, bool)
    covered[M.vertex_ids()] = True
    return not (~covered[rows].any(axis=1)).any() if len(rows) else True


# ---------------------------------------------------------------------------
# end to end
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PipelineConfig:
    exponents: Exponents = Exponents(probability=0.25, samples=10)
    bite: float = 0.1
    lp_mode: str = "float"
    closure: str = "auto"
    require_perfect: bool = False
    library: bool = True
    quota: int = 3
    extend: bool = True
    workers: int = 1


@dataclass
class PipelineReport:
    matching: Matching
    uncovered: int
    sample_report: dict
    sparse_report: dict
    stages: list  # (name, outcome dict)

    def to_record(self) -> dict:
        return {"matching_size": len(self.matching), "uncovered": self.uncovered,
                "sample_properties": self.sample_report, "sparse_properties": self.sparse_report,
                "stages": [{"stage": s, **o} for s, o in self.stages]}


def run_pipeline(H: PartiteHypergraph, config: PipelineConfig = PipelineConfig(), seed: int = 0,
                 *, t: int | None = None) -> PipelineReport:
    """Library, samples, fractional matchings, rounding, nibble, absorb.

    The returned matching is re-validated against ``H`` itself.
    """
    from rainbow.absorption import AbsorptionFailure, absorb, build_library, partition_balanced

    stages = []
    lib = None
    if config.library:
        lib = build_library(H, quota=config.quota, seed=seed)
        stages.append(("library", {"members": len(lib), "deficit": {str(k): v for k, v in lib.deficit.items()}}))
    span = lib.span if lib is not None else frozenset()
    rest = induced(H, H.vertices - span)
    batch = draw_samples(rest, config.exponents, seed, t=t)
    nonempty = [s for s in batch.samples if len(s)]
    stages.append(("samples", {"count": len(batch), "nonempty": len(nonempty), "p": batch.p}))

    def solve(s):
        if len(s) == 0:
            return SampleSolution(None, False, "none", "empty sample")
        return sample_fractional_pm(rest, s, mode=config.lp_mode, closure=config.closure)

    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            results = list(pool.map(solve, batch.samples))
    else:
        results = [solve(s) for s in batch.samples]
    perfect = sum(r.perfect for r in results)
    sols = [r.solution if (r.perfect or not config.require_perfect) else None for r in results]
    stages.append(("fractional", {"perfect": perfect, "used": sum(s is not None for s in sols),
                                  "routes": {k: sum(r.route == k for r in results) for k in ("closure", "lp", "none")}}))
    sparse = round_to_sparse(rest, batch, sols, seed)
    stages.append(("rounding", {"edges": len(sparse)}))
    nib = nibble_cover(sparse, config.bite, seed)
    stages.append(("nibble", {"matching": len(nib.matching), "uncovered": nib.uncovered, "rounds": nib.rounds}))
    M2 = nib.matching
    if config.extend:
        covered = np.zeros(H.nverts, bool)
        covered[M2.vertex_ids()] = True
        extra = []
        for e in rest.rows:
            if not covered[e].any():
                covered[e] = True
                extra.append(rest.native(e))
        M2 = Matching.of(H, list(M2.edges) + extra)
        stages.append(("extend", {"added": len(extra)}))
    final = Matching.of(H, list(M2.edges) + ([] if lib is None else list(lib.span_matching.edges)))
    if lib is not None:
        left = sorted(H.vertices - span - frozenset(M2.vertex_ids()))
        cols = [v for v in left if v < H.qsize]
        grd = [v for v in left if v >= H.qsize]
        c = min(len(cols), len(grd) // H.k)
        S = cols[:c] + grd[:H.k * c]
        try:
            got = absorb(lib, M2, S)
            final = got.matching
            stages.append(("absorb", {"absorbed": len(S), "ok": True}))
        except AbsorptionFailure as exc:
            # keep every part the library can still take, in order
            accepted = []
            for R in partition_balanced(H, S):
                lib.reset()
                try:
                    got = absorb(lib, M2, frozenset().union(R, *accepted))
                except AbsorptionFailure:
                    continue
                accepted.append(R)
                final = got.matching
            stages.append(("absorb", {"absorbed": len(accepted) * (H.k + 1), "ok": False,
                                      "first_failure": list(exc.R)}))
    final = Matching.of(H, final.edges)
    uncovered = len(H.vertices) - len(final.vertex_ids())
    return PipelineReport(final, uncovered, batch.report, sparse.report, stages)
