"""Ground-truth solvers: maximum matchings, rainbow decisions, fractional optima."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import connected_components

from rainbow import kernels, lp
from rainbow.core import InputError, as_fraction, KGraph, Matching, PartiteHypergraph
from rainbow.generators import KFamily, build_F, build_H, padding_colors

DEFAULT_NODE_CAP = 10**8


class Indeterminate(RuntimeError):
    """The search budget ran out before a decision; ``partial`` is the best found."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class SearchResult:
    """Outcome of :func:`max_matching`.

    ``status`` is ``"optimal"``, ``"target"`` (stopped once the requested size
    was reached) or ``"budget"`` (node cap hit; ``matching`` is a lower bound).
    """

    matching: Matching
    nodes: int
    status: str

    @property
    def size(self) -> int:
        return len(self.matching)

    @property
    def exhausted(self) -> bool:
        return self.status == "budget"


def _csr(H):
    rows = H.rows
    starts = np.searchsorted(rows[:, 0], np.arange(H.nverts + 1)) if len(rows) else np.zeros(H.nverts + 1, np.int64)
    return starts.astype(np.int64)


def max_matching(H: KGraph | PartiteHypergraph, *, target: int | None = None,
                 node_cap: int = DEFAULT_NODE_CAP, parallel: bool = False,
                 workers: int | None = None) -> SearchResult:
    """Maximum matching by branch and bound over the canonical edge order.

    With ``parallel=True`` the first branching level is split across threads
    (the kernels release the GIL); the size is the same as the serial run.
    """
    if len(H) == 0:
        return SearchResult(Matching((), 0), 0, "optimal")
    starts = _csr(H)
    masks = H.masks
    goal = kernels.NO_TARGET if target is None else int(target)
    if parallel:
        best, idx, nodes, exhausted = _parallel_search(H, starts, masks, goal, node_cap, workers)
    else:
        best, idx, nodes, exhausted = kernels.bb_search(starts, masks, H.nverts, H.arity, goal, node_cap)
    edges = [H.native(H.rows[i]) for i in idx]
    M = Matching.of(H, edges, check_host=False)
    if exhausted:
        status = "budget"
    elif target is not None and best >= target:
        status = "target"
    else:
        status = "optimal"
    return SearchResult(M, nodes, status)


def _parallel_search(H, starts, masks, goal, node_cap, workers):
    v0 = int(H.rows[0, 0])
    first = range(int(starts[v0]), int(starts[v0 + 1]))
    zero = np.zeros(masks.shape[1], np.int64)

    def take(j):
        best, idx, nodes, ex = kernels.bb_search(starts, masks, H.nverts, H.arity, goal, node_cap,
                                                  init_mask=masks[j], start_v=v0 + 1, base_size=1)
        return best, np.concatenate([[j], idx]).astype(np.int64), nodes, ex

    def skip():
        return kernels.bb_search(starts, masks, H.nverts, H.arity, goal, node_cap,
                                 init_mask=zero, start_v=v0 + 1, base_size=0)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(take, j) for j in first] + [pool.submit(skip)]
        results = [f.result() for f in futures]
    best = max(results, key=lambda r: r[0])
    return (best[0], best[1], sum(r[2] for r in results), any(r[3] for r in results))


def matching_number(H, node_cap: int = DEFAULT_NODE_CAP) -> int:
    res = max_matching(H, node_cap=node_cap)
    if res.exhausted:
        raise Indeterminate("budget exhausted computing the matching number", res.matching)
    return res.size


# ---------------------------------------------------------------------------
# rainbow matchings and the reduction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RainbowMatching:
    """One edge per family member, pairwise disjoint; ``edges[i]`` comes from ``F_i``."""

    edges: tuple[tuple[int, ...], ...]

    def is_valid_for(self, family: KFamily) -> bool:
        if len(self.edges) != family.t:
            return False
        seen = set()
        for e, F in zip(self.edges, family.families):
            if tuple(e) not in F.edge_set or seen.intersection(e):
                return False
            seen.update(e)
        return True

    @classmethod
    def from_matching(cls, M: Matching, t: int) -> "RainbowMatching":
        by_color = {e[0]: tuple(e[1:]) for e in M.edges if e[0] < t}
        if sorted(by_color) != list(range(t)):
            raise InputError("matching does not use every one of the first t colours")
        return cls(tuple(by_color[i] for i in range(t)))


def has_rainbow_matching(family: KFamily, node_cap: int = DEFAULT_NODE_CAP) -> RainbowMatching | None:
    """A rainbow matching of ``family`` if one exists, else ``None``."""
    H = build_F(family)
    res = max_matching(H, target=family.t, node_cap=node_cap)
    if res.size >= family.t:
        return RainbowMatching.from_matching(res.matching, family.t)
    if res.exhausted:
        raise Indeterminate("budget exhausted deciding the rainbow matching", res.matching)
    return None


def pad_matching(M: Matching, family: KFamily) -> Matching:
    """Extend a size-t matching of ``build_F(family)`` to a size ``m + t`` matching of ``build_H``."""
    n, k, t = family.n, family.k, family.t
    m = padding_colors(n, k, t)
    if len(M) != t:
        raise InputError(f"expected a matching of size {t}, got {len(M)}")
    used = set()
    for e in M.edges:
        used.update(e[1:])
    free = [v for v in range(n) if v not in used]
    extra = [(t + i,) + tuple(free[i * k:(i + 1) * k]) for i in range(m)]
    return Matching.of(build_H(family), list(M.edges) + extra)


def restrict_matching(M: Matching, family: KFamily) -> Matching:
    """The edges of a size ``m + t`` matching of ``build_H`` that use the first t colours."""
    edges = [e for e in M.edges if e[0] < family.t]
    return Matching.of(build_F(family), edges)


def reduction_sides(family: KFamily, node_cap: int = DEFAULT_NODE_CAP) -> tuple[bool, bool]:
    """(F-side has a size-t matching, H-side has a size ``floor(n/k)`` matching), solved independently."""
    n, k, t = family.n, family.k, family.t
    m = padding_colors(n, k, t)
    HF, HH = build_F(family), build_H(family)
    left = max_matching(HF, target=t, node_cap=node_cap)
    right = max_matching(HH, target=m + t, node_cap=node_cap)
    if (left.exhausted and left.size < t) or (right.exhausted and right.size < m + t):
        raise Indeterminate("budget exhausted in the reduction check")
    ok_left, ok_right = left.size >= t, right.size >= m + t
    if ok_left:
        padded = pad_matching(Matching.of(HF, left.matching.edges[:t]), family)
        assert len(padded) == m + t
    if ok_right:
        restricted = restrict_matching(right.matching, family)
        assert len(restricted) == t
    return ok_left, ok_right


def reduction_equivalence_check(family: KFamily, node_cap: int = DEFAULT_NODE_CAP) -> bool:
    left, right = reduction_sides(family, node_cap)
    return left == right


# ---------------------------------------------------------------------------
# fractional matchings and covers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FractionalSolution:
    """Fractional matching (edge weights) paired with a fractional vertex cover.

    Edge keys are native edge tuples, vertex keys global vertex ids. ``exact``
    is True when both values are certified optimal and equal.
    """

    edge_weights: dict
    vertex_weights: dict
    matching_value: Fraction
    cover_value: Fraction
    exact: bool = True
    float_value: float | None = None  # solver objective in float mode

    def vertex_loads(self, H) -> dict:
        loads = {}
        for e, w in self.edge_weights.items():
            for v in H.global_row(e):
                loads[v] = loads.get(v, Fraction(0)) + w
        return loads

    def check(self, H) -> None:
        """Re-verify feasibility of both sides exactly; raises AssertionError."""
        for e, w in self.edge_weights.items():
            assert 0 <= w <= 1, (e, w)
        for v, load in self.vertex_loads(H).items():
            assert load <= 1, (v, load)
        for v, w in self.vertex_weights.items():
            assert 0 <= w <= 1, (v, w)
        for row in H.rows.tolist():
            assert sum((self.vertex_weights.get(v, Fraction(0)) for v in row), Fraction(0)) >= 1, row
        assert self.matching_value == sum(self.edge_weights.values(), Fraction(0))
        assert self.cover_value == sum(self.vertex_weights.values(), Fraction(0))
        assert self.matching_value <= self.cover_value
        if self.exact:
            assert self.matching_value == self.cover_value


def _components(H):
    """Connected components of the edge set: list of (vertex ids, edge indices)."""
    rows = H.rows
    verts = np.unique(rows)
    index = {int(v): i for i, v in enumerate(verts)}
    local = np.vectorize(index.__getitem__)(rows) if len(rows) else rows
    src = np.repeat(local[:, 0], rows.shape[1] - 1)
    dst = local[:, 1:].ravel()
    g = coo_matrix((np.ones(len(src)), (src, dst)), shape=(len(verts), len(verts)))
    ncomp, label = connected_components(g, directed=False)
    edge_label = label[local[:, 0]]
    out = []
    for c in range(ncomp):
        out.append((verts[label == c], np.flatnonzero(edge_label == c)))
    return out


def fractional_optimum(H: KGraph | PartiteHypergraph, mode: str = "exact",
                       max_edges: int = 50_000) -> FractionalSolution:
    """Maximum fractional matching and minimum fractional vertex cover.

    ``mode="exact"`` solves each connected component with the exact simplex;
    the result satisfies strong duality with equality of rationals.
    ``mode="float"`` uses HiGHS, rationalises, and repairs both sides so they
    stay feasible; the two values then bracket the optimum.
    """
    if mode not in ("exact", "float"):
        raise InputError(f"unknown LP mode {mode!r}")
    if mode == "exact" and len(H) > max_edges:
        raise InputError(f"exact LP limited to {max_edges} edges, got {len(H)}")
    edge_w, vert_w = {}, {}
    fval = 0.0
    if len(H) == 0:
        return FractionalSolution({}, {}, Fraction(0), Fraction(0), True,
                                  float_value=0.0 if mode == "float" else None)
    for verts, eidx in _components(H):
        rows = H.rows[eidx]
        local = np.searchsorted(verts, rows)
        if mode == "exact":
            A = np.zeros((len(verts), len(rows)), np.int64)
            A[local, np.arange(len(rows))[:, None]] = 1
            x, y, _ = lp.solve_packing(A)
        elif mode == "float":
            cols = np.repeat(np.arange(len(rows)), rows.shape[1])
            A = csr_matrix((np.ones(local.size), (local.ravel(), cols)), shape=(len(verts), len(rows)))
            xf, yf, v = lp.solve_packing_float(A)
            fval += v
            x, y = _repair(A, xf, yf)
        for j, row in enumerate(rows):
            if x[j]:
                edge_w[H.native(row)] = x[j]
        for i, v in enumerate(verts.tolist()):
            if y[i]:
                vert_w[v] = y[i]
    mv = sum(edge_w.values(), Fraction(0))
    cv = sum(vert_w.values(), Fraction(0))
    sol = FractionalSolution(edge_w, vert_w, mv, cv, exact=(mode == "exact") or mv == cv,
                             float_value=fval if mode == "float" else None)
    sol.check(H)
    return sol


REPAIR_DENOMINATOR = 2**20


def _repair(A, xf, yf, den: int = REPAIR_DENOMINATOR):
    """Round a float primal/dual pair onto the grid ``1/den`` keeping exact feasibility.

    The primal is floored and the dual ceiled, so HiGHS violations below
    ``1/den`` vanish; anything larger is scaled away. ``A`` is the sparse
    vertex-by-edge incidence matrix.
    """
    A = A.astype(np.int64)
    xn = np.floor(np.clip(np.asarray(xf), 0, 1) * den).astype(np.int64)
    loads = A @ xn
    worst = int(loads.max()) if len(loads) else 0
    xden = max(den, worst)
    yn = np.minimum(np.ceil(np.clip(np.asarray(yf), 0, 1) * den), den).astype(np.int64)
    sums = A.T @ yn
    low = int(sums.min()) if len(sums) else den
    if low <= 0:
        yn, yden = np.ones_like(yn), 1
    elif low < den:
        # scaling by den/low, capped at 1, keeps every edge covered
        yn, yden = np.minimum(yn * den, low * den), low * den
    else:
        yden = den
    x = [Fraction(int(v), xden) if v else Fraction(0) for v in xn]
    y = [Fraction(int(v), yden) if v else Fraction(0) for v in yn]
    return x, y


# ---------------------------------------------------------------------------
# closure graph and density
# ---------------------------------------------------------------------------

CLOSURE_MAX_CANDIDATES = 5_000_000


def closure_graph(H: PartiteHypergraph, omega: dict) -> PartiteHypergraph:
    """All one-colour (k+1)-sets of ``V(H)`` whose ``omega`` weight is at least 1.

    ``omega`` maps global vertex ids to weights and must cover every edge of ``H``.
    """
    w = {int(v): Fraction(x) for v, x in omega.items()}
    for row in H.rows.tolist():
        if sum((w.get(v, Fraction(0)) for v in row), Fraction(0)) < 1:
            raise InputError(f"omega does not cover edge {H.native(row)}")
    colors = sorted(H.Q)
    ground = sorted(H.V)
    k = H.k
    if len(ground) < k or not colors:
        return H.with_rows(np.zeros((0, k + 1), np.int64))
    n_combos = math.comb(len(ground), k)
    if n_combos * len(colors) > CLOSURE_MAX_CANDIDATES:
        raise InputError(f"closure has {n_combos * len(colors)} candidate edges, over the limit")
    den = 1
    for v in colors + ground:
        den = math.lcm(den, w.get(v, Fraction(0)).denominator)
    wq = np.array([int(w.get(v, Fraction(0)) * den) for v in colors], dtype=object)
    wv = np.array([int(w.get(v, Fraction(0)) * den) for v in ground], dtype=object)
    combos = np.array(list(itertools.combinations(range(len(ground)), k)), np.int64)
    body_sum = wv[combos].sum(axis=1)
    hit = (wq[:, None] + body_sum[None, :]) >= den
    ci, bi = np.nonzero(hit.astype(bool))
    g = np.asarray(ground, np.int64)
    rows = np.column_stack([np.asarray(colors, np.int64)[ci], g[combos[bi]]])
    return H.with_rows(rows.reshape(-1, k + 1))


@dataclass(frozen=True)
class DensityResult:
    dense: bool
    witness: frozenset | None  # global ids of a violating A
    witness_edges: int | None
    required: Fraction
    checked: int
    exact: bool


def check_dense(H: PartiteHypergraph, t: int, a0, a1, a2, *, exact: bool | None = None,
                samples: int = 2000, seed: int = 0) -> DensityResult:
    """Is ``e(H[A]) >= a0 e(H)`` for every large ``A``?

    Large means ``|A & X| >= t - a1 n`` and ``|A & V| >= n - t - a2 n`` with
    ``X`` the colours. Only extreme sets (both sizes at their bounds) need
    checking since ``e(H[A])`` grows with ``A``; for a fixed ground part the worst
    colour part is the one with the smallest colour counts. The minimising
    violator is returned as the witness.
    """
    n = H.vsize
    a0, a1, a2 = as_fraction(a0), as_fraction(a1), as_fraction(a2)
    colors = sorted(H.Q)
    ground = sorted(v - H.qsize for v in H.V)
    sx = max(0, math.ceil(t - a1 * n))
    sv = max(0, math.ceil(n - t - a2 * n))
    required = a0 * len(H)
    if sx > len(colors) or sv > len(ground):
        return DensityResult(True, None, None, required, 0, True)
    if exact is None:
        exact = n <= 14
    if n > 62:
        raise InputError("check_dense supports at most 62 ground vertices")
    if exact:
        subsets = list(itertools.combinations(ground, sv))
    else:
        rng = np.random.default_rng(seed)
        subsets = [tuple(sorted(rng.choice(ground, size=sv, replace=False).tolist())) for _ in range(samples)]
    body_bits = np.zeros(len(H), np.int64)
    for col in range(H.k):
        body_bits |= np.left_shift(np.int64(1), H.bodies[:, col])
    set_masks = np.array([sum(1 << v for v in s) for s in subsets], np.int64)
    counts = kernels.count_by_color(body_bits, H.colors, H.qsize, set_masks, inside=True)
    counts = counts[:, colors]
    order = np.argsort(counts, axis=1, kind="stable")[:, :sx]
    totals = np.take_along_axis(counts, order, axis=1).sum(axis=1)
    i = int(np.argmin(totals))
    if totals[i] >= required:
        return DensityResult(True, None, None, required, len(subsets), exact)
    A = frozenset([colors[c] for c in order[i]] + [H.qsize + v for v in subsets[i]])
    return DensityResult(False, A, int(totals[i]), required, len(subsets), exact)
