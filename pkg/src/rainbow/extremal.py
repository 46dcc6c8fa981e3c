"""Matching in graphs close to the extremal configuration.

Vertex roles follow the extremal graph ``F_t(k,n)`` with cover ``W``: an edge
in *positional form* is ``(x, u_2, ..., u_k, w)`` with ``x`` a colour, the
``u`` in ``U = ground - W`` (ascending) and ``w`` in ``W``. All vertex ids here
are global ids of the host :class:`~rainbow.core.PartiteHypergraph`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from rainbow.core import InputError, Matching, PartiteHypergraph, as_fraction, induced
from rainbow.exact import DEFAULT_NODE_CAP, RainbowMatching, max_matching
from rainbow.generators import KFamily, build_F, closeness_to_extremal, threshold

ROTATION_EXHAUSTIVE_MAX = 20
ROTATION_SAMPLES = 10_000


class PreconditionError(InputError):
    """The instance does not satisfy the hypotheses the routine relies on."""


class ExtremalFailure(RuntimeError):
    """The constructive matcher got stuck; ``stage`` and ``color`` say where."""

    def __init__(self, stage: str, color: int | None = None, partial=None, message: str = ""):
        self.stage, self.color, self.partial = stage, color, partial
        super().__init__(message or f"extremal matcher failed at stage {stage!r}"
                         + (f" on colour {color}" if color is not None else ""))


# ---------------------------------------------------------------------------
# goodness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GoodnessReport:
    alpha: Fraction
    bad: frozenset
    deficiency: dict  # global vertex id -> missing neighbourhood count
    cover: tuple  # global ids of W
    colors: tuple
    ground: tuple

    @property
    def n(self) -> int:
        return len(self.ground)


def _split(H: PartiteHypergraph, colors, ground):
    colors = tuple(sorted(H.Q if colors is None else (int(c) for c in colors)))
    ground = tuple(sorted(H.V if ground is None else (int(v) for v in ground)))
    if any(c >= H.qsize for c in colors) or any(v < H.qsize for v in ground):
        raise InputError("colour/ground split does not match the vertex classes")
    return colors, ground


def classify_goodness(H: PartiteHypergraph, t: int, alpha, *, cover=None, colors=None,
                      ground=None) -> GoodnessReport:
    """Per-vertex deficiency against ``F_t(k,n)`` with cover ``W``.

    ``colors`` and ``ground`` default to the classes of ``H`` (only edges
    inside them count); ``cover`` defaults to the closeness witness. A vertex is
    bad when its deficiency exceeds ``alpha * n**k``.
    """
    colors, ground = _split(H, colors, ground)
    n, k = len(ground), H.k
    if len(colors) != t:
        raise InputError(f"expected {t} colours, found {len(colors)}")
    if cover is None:
        if colors != tuple(range(H.qsize)) or len(ground) != H.vsize:
            raise InputError("cover must be given for a restricted vertex split")
        cover = tuple(H.qsize + w for w in closeness_to_extremal(H, t).witness)
    cover = tuple(sorted(int(w) for w in cover))
    if len(cover) != t or not set(cover) <= set(ground):
        raise InputError("cover must be t ground vertices")
    alpha = as_fraction(alpha)

    inside = np.zeros(H.nverts, bool)
    inside[list(colors) + list(ground)] = True
    in_w = np.zeros(H.nverts, bool)
    in_w[list(cover)] = True
    rows = H.rows[inside[H.rows].all(axis=1)] if len(H) else H.rows
    meets = in_w[rows[:, 1:]].any(axis=1) if len(rows) else np.zeros(0, bool)
    good_rows = rows[meets]
    cnt = np.bincount(good_rows.ravel(), minlength=H.nverts) if len(good_rows) else np.zeros(H.nverts, int)

    color_target = math.comb(n, k) - math.comb(n - t, k)
    deficiency = {}
    for c in colors:
        deficiency[c] = color_target - int(cnt[c])
    in_w_target = t * math.comb(n - 1, k - 1)
    out_w_target = t * (math.comb(n - 1, k - 1) - math.comb(n - 1 - t, k - 1))
    for v in ground:
        deficiency[v] = (in_w_target if in_w[v] else out_w_target) - int(cnt[v])
    limit = alpha * n**k
    bad = frozenset(v for v, d in deficiency.items() if d > limit)
    return GoodnessReport(alpha, bad, deficiency, cover, colors, ground)


# ---------------------------------------------------------------------------
# rotation
# ---------------------------------------------------------------------------


def positional(row, cover_set) -> tuple[int, ...]:
    """``(x, u_2..u_k ascending, w)`` for an edge with exactly one cover vertex."""
    row = sorted(int(v) for v in row)
    ws = [v for v in row[1:] if v in cover_set]
    if len(ws) != 1:
        raise InputError(f"edge {row} does not meet the cover exactly once")
    us = [v for v in row[1:] if v not in cover_set]
    return (row[0], *us, ws[0])


def rotation_edges(S, edges) -> list[tuple[int, ...]]:
    """The ``k+1`` sets ``f_j = {u_j, v_{1,j+1}, ..., v_{k,j+k}}`` (indices mod k+1).

    ``S = (u_1, ..., u_{k+1})`` and ``edges`` are ``k`` positional edges; the
    results are positional as well (position p holds the vertex of role p).
    """
    k = len(edges)
    if len(S) != k + 1 or any(len(e) != k + 1 for e in edges):
        raise InputError("rotation needs k positional edges and k+1 free vertices")
    out = []
    for j in range(k + 1):
        f = [0] * (k + 1)
        f[j] = S[j]
        for i in range(1, k + 1):
            p = (j + i) % (k + 1)
            f[p] = edges[i - 1][p]
        out.append(tuple(f))
    return out


@dataclass(frozen=True)
class RotationFiring:
    free: tuple
    removed: tuple
    added: tuple
    size_before: int
    size_after: int


def apply_rotation(M: list, removed, added) -> list:
    """``(M - removed) + added`` with a disjointness check."""
    rem = set(map(tuple, removed))
    out = [e for e in M if tuple(e) not in rem]
    if len(out) != len(M) - len(rem):
        raise InputError("rotation removes edges that are not in the matching")
    used = set()
    for e in out + list(added):
        if used.intersection(e):
            raise AssertionError("rotation produced overlapping edges")
        used.update(e)
    return out + [tuple(e) for e in added]


# ---------------------------------------------------------------------------
# greedy + rotation
# ---------------------------------------------------------------------------


@dataclass
class ExtremalResult:
    matching: Matching
    firings: list = field(default_factory=list)
    history: list = field(default_factory=list)  # matching size after each step
    greedy_steps: int = 0


def _tuples(M, k, rng):
    m = len(M)
    if m < k:
        return
    if m <= ROTATION_EXHAUSTIVE_MAX:
        yield from itertools.permutations(range(m), k)
        return
    for _ in range(ROTATION_SAMPLES):
        yield tuple(int(i) for i in rng.choice(m, size=k, replace=False))


def extremal_match(H: PartiteHypergraph, t: int, alpha=None, *, cover=None, colors=None,
                   ground=None, seed: int = 0) -> ExtremalResult:
    """A size-t matching with one colour and one cover vertex per edge.

    Colours are attempted in ascending deficiency order. A colour that has no
    free edge of the required shape triggers a rotation over ordered k-tuples
    of the current matching; if none applies, :class:`ExtremalFailure` names
    the colour. ``alpha``, when given, is only checked (bad vertices are
    reported in the failure message); the procedure runs regardless.
    """
    colors, ground = _split(H, colors, ground)
    rep = classify_goodness(H, t, alpha if alpha is not None else 1, cover=cover,
                            colors=colors, ground=ground)
    cover_set = set(rep.cover)
    k = H.k
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x3E1]))

    inside = np.zeros(H.nverts, bool)
    inside[list(colors) + list(ground)] = True
    rows = H.rows[inside[H.rows].all(axis=1)] if len(H) else H.rows
    in_w = np.zeros(H.nverts, bool)
    in_w[list(cover_set)] = True
    shape_ok = in_w[rows[:, 1:]].sum(axis=1) == 1 if len(rows) else np.zeros(0, bool)
    rows = rows[shape_ok]
    by_color = {c: rows[rows[:, 0] == c] for c in colors}
    has = H.row_set

    free = np.zeros(H.nverts, bool)
    free[list(colors) + list(ground)] = True
    M: list[tuple[int, ...]] = []
    res = ExtremalResult(Matching((), 0))
    order = sorted(colors, key=lambda c: (rep.deficiency[c], c))
    u_pool = [v for v in ground if v not in cover_set]
    w_pool = [v for v in ground if v in cover_set]

    def take(edge):
        M.append(edge)
        free[list(edge)] = False

    for x in order:
        cand = by_color[x]
        ok = free[cand].all(axis=1) if len(cand) else np.zeros(0, bool)
        hit = np.flatnonzero(ok)
        if len(hit):
            take(positional(cand[hit[0]], cover_set))
            res.greedy_steps += 1
            res.history.append(len(M))
            continue
        us = [v for v in u_pool if free[v]][: k - 1]
        ws = [v for v in w_pool if free[v]][:1]
        if len(us) < k - 1 or not ws:
            raise ExtremalFailure("rotation", x, list(M), "not enough free vertices for a rotation")
        S = (x, *us, ws[0])
        fired = False
        for idx in _tuples(M, k, rng):
            es = [M[i] for i in idx]
            fs = rotation_edges(S, es)
            if all(tuple(sorted(f)) in has for f in fs):
                before = len(M)
                M[:] = apply_rotation(M, es, fs)
                free[list(S)] = False
                res.firings.append(RotationFiring(S, tuple(es), tuple(fs), before, len(M)))
                fired = True
                break
        if not fired:
            raise ExtremalFailure("rotation", x, list(M))
        res.history.append(len(M))
    if len(M) != t:
        raise ExtremalFailure("size", None, list(M))
    res.matching = Matching.of(H, [H.native(e) for e in M])
    return res


# ---------------------------------------------------------------------------
# close case
# ---------------------------------------------------------------------------


@dataclass
class CloseCaseResult:
    rainbow: RainbowMatching
    matching: Matching
    closeness: object
    goodness: GoodnessReport
    b: int
    sub_instance: tuple  # (colours, ground vertices) of the small exact instance
    residual: tuple  # (t', n')
    extremal: ExtremalResult


def close_case_solve(family: KFamily, epsilon=0.05, alpha=None, *, check_threshold: bool = True,
                     check_closeness: bool = True, node_cap: int = DEFAULT_NODE_CAP,
                     seed: int = 0) -> CloseCaseResult:
    """Rainbow matching for a family whose graph is close to the extremal one.

    Bad vertices (``alpha``, default ``sqrt(epsilon)``) are handled by a
    ``b``-colour sub-instance solved exactly; the remaining colours go through
    :func:`extremal_match` on the residual graph.
    """
    n, k, t = family.n, family.k, family.t
    epsilon = as_fraction(epsilon)
    if alpha is None:
        alpha = as_fraction(math.sqrt(epsilon))
    if check_threshold:
        bound = threshold(n, k, t)
        low = [i for i, s in enumerate(family.sizes()) if s <= bound]
        if low:
            raise PreconditionError(f"members {[i + 1 for i in low]} have at most {bound} edges")
    H = build_F(family)
    close = closeness_to_extremal(H, t)
    if check_closeness and close.epsilon > epsilon:
        raise PreconditionError(f"graph is {close.epsilon} from the extremal graph, above {epsilon}")
    W = tuple(t + w for w in close.witness)
    good = classify_goodness(H, t, alpha, cover=W)
    B = good.bad
    X = list(range(t))
    U = [v for v in H.V if v not in W]
    bx = sorted(v for v in B if v < t)
    bw = sorted(v for v in B if v in W)
    b = max(len(bx), len(bw))
    X1 = bx + [c for c in X if c not in B][: b - len(bx)]
    W1 = bw + [w for w in W if w not in B][: b - len(bw)]

    sub_vertices = set(X1) | set(W1) | set(U)
    M_edges = []
    if b:
        F1 = induced(H, sub_vertices)
        r = max_matching(F1, target=b, node_cap=node_cap)
        if r.size < b:
            raise ExtremalFailure("sub-instance", None, list(r.matching.edges),
                                  f"sub-instance on {b} colours has no matching of size {b}")
        M_edges = list(r.matching.edges[:b])
    used = set()
    for e in M_edges:
        used.update(H.global_row(e))

    X2 = [c for c in X if c not in X1]
    G2 = sorted(v for v in H.V if v not in used and v not in B)
    W2 = [w for w in W if w not in W1]
    rest = None
    if X2:
        F2 = induced(H, set(X2) | set(G2))
        try:
            rest = extremal_match(F2, len(X2), cover=W2, colors=X2, ground=G2, seed=seed)
        except ExtremalFailure as exc:
            exc.stage = "residual-" + exc.stage
            exc.partial = (M_edges, exc.partial)
            raise
        M_edges += [e for e in rest.matching.edges]
    if rest is None:
        rest = ExtremalResult(Matching((), 0))
    M = Matching.of(H, M_edges)
    rainbow = RainbowMatching.from_matching(M, t)
    assert rainbow.is_valid_for(family)
    return CloseCaseResult(rainbow, M, close, good, b, (tuple(X1), tuple(sorted(sub_vertices - set(X1)))),
                           (len(X2), len(G2)), rest)
