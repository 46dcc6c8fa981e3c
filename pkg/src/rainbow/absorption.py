"""Absorbing sets and the absorbing library.

A balanced ``k(k+1)``-set ``Q`` is *R-absorbing* for a balanced ``(k+1)``-set
``R`` when ``Q`` spans a perfect matching and ``Q | R`` spans ``k+1`` disjoint
edges. A library of disjoint absorbing sets lets any small balanced leftover
be swallowed: each ``(k+1)``-part of the leftover trades one library member's
k edges for ``k+1`` edges on the member plus the part.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from rainbow.core import InputError, Matching, PartiteHypergraph
from rainbow.exact import max_matching


class AbsorptionFailure(RuntimeError):
    def __init__(self, R, message=""):
        self.R = tuple(sorted(R))
        super().__init__(message or f"no unreserved absorbing set for {self.R}")


def _split(H: PartiteHypergraph, S):
    S = sorted(int(v) for v in S)
    cols = [v for v in S if v < H.qsize]
    grd = [v for v in S if v >= H.qsize]
    return cols, grd


def is_balanced(H: PartiteHypergraph, S) -> bool:
    cols, grd = _split(H, S)
    return len(grd) == H.k * len(cols)


def _check_balanced(H, S, size, name):
    S = frozenset(int(v) for v in S)
    if len(S) != size or not is_balanced(H, S):
        raise InputError(f"{name} must be a balanced set of {size} vertices")
    if not S <= H.vertices:
        raise InputError(f"{name} is not inside V(H)")
    return S


def local_rows(H: PartiteHypergraph, T) -> np.ndarray:
    """Edges of ``H`` inside the small vertex set ``T`` (global rows)."""
    cols, grd = _split(H, T)
    have = H.row_set
    out = [(c, *body) for c in cols for body in itertools.combinations(grd, H.k) if (c, *body) in have]
    return np.array(out, np.int64).reshape(-1, H.k + 1)


def _nu(H, T, target):
    sub = PartiteHypergraph(H.qsize, H.vsize, H.k, rows=local_rows(H, T), vertices=T)
    return max_matching(sub, target=target)


def is_absorbing(H: PartiteHypergraph, Q, R) -> bool:
    k = H.k
    Q = _check_balanced(H, Q, k * (k + 1), "Q")
    R = _check_balanced(H, R, k + 1, "R")
    if Q & R:
        raise InputError("Q and R overlap")
    if _nu(H, Q, k).size < k:
        return False
    return _nu(H, Q | R, k + 1).size == k + 1


def absorbing_matchings(H: PartiteHypergraph, Q, R=()) -> list[tuple[int, ...]]:
    """A perfect matching of ``H[Q | R]`` as native edges (empty list if none)."""
    T = frozenset(Q) | frozenset(R)
    want = len(T) // (H.k + 1)
    res = _nu(H, T, want)
    return list(res.matching.edges) if res.size == want else []


# ---------------------------------------------------------------------------
# constructive enumeration
# ---------------------------------------------------------------------------


class HostIndex:
    """Lookup ``u -> {colour: set of (k-1)-subsets S with S+u+colour an edge}``.

    Built on demand from one sort of the edge/ground-vertex incidences.
    """

    def __init__(self, H: PartiteHypergraph):
        self.H = H
        bodies = H.rows[:, 1:]
        flat = bodies.ravel()
        self._order = np.argsort(flat, kind="stable") // H.k if len(flat) else np.zeros(0, np.int64)
        self._starts = np.searchsorted(np.sort(flat), np.arange(H.nverts + 1))
        self._by_vertex = {}

    def around(self, u: int) -> dict:
        got = self._by_vertex.get(u)
        if got is None:
            H = self.H
            got = {}
            for row in H.rows[self._order[self._starts[u]:self._starts[u + 1]]].tolist():
                got.setdefault(row[0], set()).add(tuple(v for v in row[1:] if v != u))
            self._by_vertex[u] = got
        return got


@dataclass
class Enumeration:
    sets: list
    complete: bool  # False when the budget or the work cap stopped the search


def enumerate_absorbing(H: PartiteHypergraph, R, budget: int | None = 100, *, avoid=(),
                        work_cap: int = 200_000, index: HostIndex | None = None) -> Enumeration:
    """R-absorbing sets built by the swap recipe, each re-verified.

    Fix an edge ``{x, v_1..v_k}`` of R's colour avoiding R, then for each j a
    k-set ``U_j`` (one colour, k-1 ground vertices) disjoint from everything
    chosen so far with both ``U_j + u_j`` and ``U_j + v_j`` edges. Vertices in
    ``avoid`` are never used.
    """
    k = H.k
    R = _check_balanced(H, R, k + 1, "R")
    (x,), us = _split(H, R)
    index = index or HostIndex(H)
    blocked = frozenset(int(v) for v in avoid) | R
    found, seen = [], set()
    work = 0

    rows = H.rows[H.rows[:, 0] == x] if len(H) else H.rows
    start_bodies = [tuple(r[1:]) for r in rows.tolist() if not blocked.intersection(r[1:])]

    def extend(j, vs, used, parts):
        nonlocal work
        if j == k:
            Q = frozenset(vs).union(*parts)
            if Q not in seen:
                seen.add(Q)
                if is_absorbing(H, Q, R):
                    found.append(Q)
            return budget is not None and len(found) >= budget
        u, v = us[j], vs[j]
        au, av = index.around(u), index.around(v)
        for c in sorted(set(au) & set(av)):
            if c in used:
                continue
            for rest in sorted(au[c] & av[c]):
                work += 1
                if work > work_cap:
                    return True
                if used.intersection(rest) or v in rest:
                    continue
                part = frozenset((c, *rest))
                if extend(j + 1, vs, used | part, parts + [part]):
                    return True
        return False

    stopped = False
    for body in start_bodies:
        if extend(0, body, blocked | set(body), []):
            stopped = True
            break
    return Enumeration(found, complete=not stopped)


# ---------------------------------------------------------------------------
# library
# ---------------------------------------------------------------------------


def absorbing_constant_bound(k: int, zeta=0.5) -> float:
    """Upper limit ``zeta^(2k) / (12 k^2 2^k (k!)^k)^2`` for the library constant."""
    return zeta ** (2 * k) / (12 * k * k * 2**k * math.factorial(k) ** k) ** 2


@dataclass
class FaithfulReport:
    p: float
    expected: float
    drawn: int
    eq1_size_ok: bool
    eq2_min_hits: int
    eq2_required: float
    eq2_ok: bool
    eq3_pairs: int
    eq3_limit: float
    eq3_ok: bool
    probes: int
    kept: int


@dataclass
class AbsorbingLibrary:
    host: PartiteHypergraph
    sets: list  # frozensets of global ids
    member_matchings: list  # native edges spanning each member
    index: dict  # type key -> member positions
    used: list = field(default_factory=list)
    quota: int = 0
    deficit: dict = field(default_factory=dict)
    policy: str = "engineered"
    faithful: FaithfulReport | None = None
    key_fn: object = None

    def __post_init__(self):
        if not self.used:
            self.used = [False] * len(self.sets)

    def __len__(self):
        return len(self.sets)

    @property
    def span(self) -> frozenset:
        return frozenset().union(*self.sets) if self.sets else frozenset()

    @property
    def span_matching(self) -> Matching:
        return Matching.of(self.host, [e for m in self.member_matchings for e in m])

    def key_of(self, R) -> object:
        return None if self.key_fn is None else self.key_fn(R)

    def reset(self):
        self.used = [False] * len(self.sets)


def color_class_key(H: PartiteHypergraph):
    """Key a balanced set by whether its colour has a complete neighbourhood."""
    full = math.comb(H.vsize, H.k)
    deg = np.bincount(H.colors, minlength=H.qsize) if len(H) else np.zeros(H.qsize, int)

    def key(R):
        c = min(R)
        return "complete" if deg[c] == full else "partial"

    return key


def _random_balanced(H, rng, size_colors, colors=None, avoid=frozenset()):
    cols = sorted(set(colors if colors is not None else H.Q) - avoid)
    grd = sorted(H.V - avoid)
    if len(cols) < size_colors or len(grd) < H.k * size_colors:
        return None
    pc = rng.choice(len(cols), size=size_colors, replace=False)
    pg = rng.choice(len(grd), size=H.k * size_colors, replace=False)
    return frozenset([cols[i] for i in pc] + [grd[i] for i in pg])


def build_library(H: PartiteHypergraph, policy: str = "engineered", *, quota: int = 3,
                  keyed: bool = False, seed: int = 0, max_probes: int = 200,
                  avoid=(), c: float | None = None, zeta=0.5,
                  eq2_probes: int = 200) -> AbsorbingLibrary:
    """Pairwise disjoint absorbing sets with a perfect matching on their union.

    Engineered mode greedily adds, for random probe sets R of each type, an
    R-absorbing set disjoint from the members chosen so far, until ``quota``
    members per type exist (``deficit`` records shortfalls). Faithful mode
    samples every balanced ``k(k+1)``-set independently with probability
    ``p = c n / (C(floor(n/k), k) C(n, k^2))`` and reports the three sampling
    properties before pruning.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xAB5]))
    avoid = frozenset(int(v) for v in avoid)
    key_fn = color_class_key(H) if keyed else None
    if policy == "engineered":
        return _engineered(H, quota, key_fn, rng, max_probes, avoid)
    if policy == "faithful":
        return _faithful(H, rng, key_fn, avoid, c, zeta, eq2_probes)
    raise InputError(f"unknown library policy {policy!r}")


def _keys_and_colors(H, key_fn):
    if key_fn is None:
        return {None: sorted(H.Q)}
    out = {}
    for col in sorted(H.Q):
        out.setdefault(key_fn((col,)), []).append(col)
    return out


def _engineered(H, quota, key_fn, rng, max_probes, avoid):
    index_host = HostIndex(H)
    sets, mats, index, deficit = [], [], {}, {}
    taken = set(avoid)
    for key, cols in _keys_and_colors(H, key_fn).items():
        index[key] = []
        probes = 0
        while len(index[key]) < quota and probes < max_probes:
            probes += 1
            R = _random_balanced(H, rng, 1, cols, frozenset(taken))
            if R is None:
                break
            got = enumerate_absorbing(H, R, budget=1, avoid=taken, index=index_host, work_cap=20_000)
            if not got.sets:
                continue
            Q = got.sets[0]
            sets.append(Q)
            mats.append(absorbing_matchings(H, Q))
            index[key].append(len(sets) - 1)
            taken |= Q
        if len(index[key]) < quota:
            deficit[key] = quota - len(index[key])
    # with a single bucket every member serves every R
    return AbsorbingLibrary(H, sets, mats, index, quota=quota, deficit=deficit, policy="engineered",
                            key_fn=key_fn)


def _faithful(H, rng, key_fn, avoid, c, zeta, eq2_probes):
    k = H.k
    n = H.vsize
    q = len(H.Q)
    if c is None:
        c = absorbing_constant_bound(k, zeta) / 2
    total = math.comb(q, k) * math.comb(n, k * k)
    p = c * n / total if total else 0.0
    drawn = int(rng.binomial(total, p)) if total and p > 0 else 0
    G = []
    seen = set()
    while len(G) < drawn:
        Q = _random_balanced(H, rng, k)
        if Q not in seen:
            seen.add(Q)
            G.append(Q)
    pairs = sum(1 for a, b in itertools.combinations(G, 2) if a & b)
    # property (2) is checked on probe sets R rather than all balanced (k+1)-sets
    hits = []
    for _ in range(eq2_probes if G else 0):
        R = _random_balanced(H, rng, 1)
        if R is None:
            break
        hits.append(sum(1 for Q in G if not Q & R and is_absorbing(H, Q, R)))
    need = c**1.5 * n
    kept, taken = [], set(avoid)
    for Q in G:
        if Q & taken:
            continue
        m = absorbing_matchings(H, Q)
        if not m:
            continue
        kept.append((Q, m))
        taken |= Q
    report = FaithfulReport(
        p=p, expected=c * n, drawn=drawn, eq1_size_ok=drawn <= 2 * c * n,
        eq2_min_hits=min(hits) if hits else 0, eq2_required=need,
        eq2_ok=bool(hits) and min(hits) >= need, eq3_pairs=pairs, eq3_limit=c**1.9 * n,
        eq3_ok=pairs <= c**1.9 * n, probes=len(hits), kept=len(kept))
    sets = [Q for Q, _ in kept]
    mats = [m for _, m in kept]
    index = {}
    for i, Q in enumerate(sets):
        index.setdefault(None if key_fn is None else key_fn(Q), []).append(i)
    deficit = {} if sets else {None: 1}
    return AbsorbingLibrary(H, sets, mats, index, quota=0, deficit=deficit, policy="faithful",
                            faithful=report, key_fn=key_fn)


# ---------------------------------------------------------------------------
# absorbing a leftover
# ---------------------------------------------------------------------------


def partition_balanced(H: PartiteHypergraph, S) -> list[frozenset]:
    """Split a balanced set into balanced (k+1)-sets, lowest indices first."""
    cols, grd = _split(H, S)
    if len(grd) != H.k * len(cols):
        raise InputError("S is not balanced")
    k = H.k
    return [frozenset([c] + grd[i * k:(i + 1) * k]) for i, c in enumerate(cols)]


@dataclass
class AbsorbResult:
    matching: Matching
    parts: list  # (R, member position)
    covered: frozenset


def absorb(library: AbsorbingLibrary, M2: Matching, S) -> AbsorbResult:
    """Perfect matching of ``V(M2) | span(library) | S``.

    Reserves one unused member per (k+1)-part of ``S``; the reservation flags
    stay set afterwards, so a second call cannot reuse a member.
    """
    H = library.host
    S = frozenset(int(v) for v in S)
    span = library.span
    m2_vertices = frozenset()
    for e in M2.edges:
        m2_vertices |= frozenset(H.global_row(e))
    if S & span or S & m2_vertices:
        raise InputError("S must avoid the library span and the matching")
    if span & m2_vertices:
        raise InputError("the matching overlaps the library span")
    parts = partition_balanced(H, S)
    assigned = {}
    picks = []
    for R in parts:
        bucket = library.index.get(library.key_of(R), [])
        chosen = None
        for pos in bucket:
            if library.used[pos] or pos in assigned:
                continue
            if is_absorbing(H, library.sets[pos], R):
                chosen = pos
                break
        if chosen is None:
            raise AbsorptionFailure(R)
        assigned[chosen] = R
        picks.append((R, chosen))
    for pos in assigned:
        library.used[pos] = True
    edges = list(M2.edges)
    for pos, Q in enumerate(library.sets):
        if pos in assigned:
            edges += absorbing_matchings(H, Q, assigned[pos])
        else:
            edges += library.member_matchings[pos]
    M = Matching.of(H, edges)
    covered = m2_vertices | span | S
    assert frozenset(M.vertex_ids()) == covered
    return AbsorbResult(M, picks, covered)
