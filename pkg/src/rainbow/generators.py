"""Named constructions, threshold arithmetic and closeness to the extremal graph."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

from rainbow import kernels
from rainbow.core import InputError, as_fraction, KGraph, PartiteHypergraph

EXACT_CLOSENESS_MAX_N = 16


@dataclass(frozen=True)
class KFamily:
    """An ordered family ``(F_1, ..., F_t)`` of k-graphs on ``range(n)``."""

    n: int
    k: int
    families: tuple[KGraph, ...]

    def __post_init__(self):
        for F in self.families:
            if (F.n, F.k) != (self.n, self.k):
                raise InputError(f"family member {F!r} is not a {self.k}-graph on {self.n} vertices")

    @property
    def t(self) -> int:
        return len(self.families)

    def sizes(self) -> list[int]:
        return [len(F) for F in self.families]

    @classmethod
    def from_edge_lists(cls, n, k, lists) -> "KFamily":
        return cls(n, k, tuple(KGraph(n, k, edges) for edges in lists))


def _check_nkt(n, k, t):
    if k < 1 or n < k or t < 1:
        raise InputError(f"need n >= k >= 1 and t >= 1, got n={n}, k={k}, t={t}")


def threshold(n: int, k: int, t: int, form: str = "first") -> int:
    """``C(n,k) - C(n-t+1,k)``, or its max with ``C(kt-1,k)`` when ``form="max"``."""
    _check_nkt(n, k, t)
    first = comb(n, k) - comb(n - t + 1, k)
    if form == "first":
        return first
    if form == "max":
        return max(first, comb(k * t - 1, k))
    raise InputError(f"unknown threshold form {form!r}")


def _edges_meeting(n: int, k: int, cover) -> np.ndarray:
    cover = set(cover)
    rows = [c for c in itertools.combinations(range(n), k) if cover.intersection(c)]
    return np.array(rows, dtype=np.int64).reshape(-1, k)


def make_Hk(t: int, n: int, k: int, cover=None) -> KGraph:
    """k-graph on ``range(n)`` of all edges meeting ``cover`` (default ``range(t)``)."""
    if k < 1 or n < k or not 0 <= t <= n:
        raise InputError(f"need n >= k >= 1 and 0 <= t <= n, got t={t}, n={n}, k={k}")
    if cover is None:
        cover = range(t)
    return KGraph(n, k, rows=_edges_meeting(n, k, cover))


def complete_kgraph(n: int, k: int) -> KGraph:
    return KGraph(n, k, rows=np.array(list(itertools.combinations(range(n), k)), np.int64).reshape(-1, k))


def make_extremal_family(n: int, k: int, t: int) -> KFamily:
    """``t`` copies of the k-graph of edges meeting the first ``t-1`` vertices."""
    _check_nkt(n, k, t)
    if n < k * t:
        raise InputError(f"need n >= k*t, got n={n}, k*t={k * t}")
    F = make_Hk(t - 1, n, k)
    return KFamily(n, k, (F,) * t)


def build_F(family: KFamily) -> PartiteHypergraph:
    """The (1,k)-partite graph with one colour per family member."""
    parts = []
    for i, F in enumerate(family.families):
        if len(F):
            parts.append(np.column_stack([np.full(len(F), i), F.rows + family.t]))
    rows = np.vstack(parts) if parts else np.zeros((0, family.k + 1), np.int64)
    return PartiteHypergraph(family.t, family.n, family.k, rows=rows)


def padding_colors(n: int, k: int, t: int) -> int:
    """``m`` in ``n - kt = km + r``."""
    if n < k * t:
        raise InputError(f"need n >= k*t, got n={n}, k*t={k * t}")
    return (n - k * t) // k


def build_H(family: KFamily) -> PartiteHypergraph:
    """``build_F`` plus ``m = (n - kt) // k`` complete colours."""
    n, k, t = family.n, family.k, family.t
    m = padding_colors(n, k, t)
    full = complete_kgraph(n, k)
    members = family.families + (full,) * m
    q = t + m
    parts = [np.column_stack([np.full(len(F), i), F.rows + q]) for i, F in enumerate(members) if len(F)]
    rows = np.vstack(parts) if parts else np.zeros((0, k + 1), np.int64)
    return PartiteHypergraph(q, n, k, rows=rows)


def family_of(H: PartiteHypergraph, colors=None) -> KFamily:
    """Inverse of :func:`build_F`: the colour neighbourhoods as a family."""
    colors = range(H.qsize) if colors is None else colors
    return KFamily(H.vsize, H.k, tuple(H.color_family(c) for c in colors))


def make_F_t(k: int, n: int, t: int) -> PartiteHypergraph:
    """The extremal graph: ``t`` colours, each adjacent to every k-set meeting ``range(t)``."""
    _check_nkt(n, k, t)
    return build_F(KFamily(n, k, (make_Hk(t, n, k),) * t))


def make_H_t(k: int, n: int, t: int) -> PartiteHypergraph:
    _check_nkt(n, k, t)
    return build_H(KFamily(n, k, (make_Hk(t, n, k),) * t))


def random_family(n: int, k: int, t: int, sizes, rng: np.random.Generator) -> KFamily:
    """Family whose i-th member is a uniformly random ``sizes[i]``-subset of all k-sets."""
    all_k = np.array(list(itertools.combinations(range(n), k)), np.int64).reshape(-1, k)
    if isinstance(sizes, int):
        sizes = [sizes] * t
    members = []
    for s in sizes:
        pick = rng.choice(len(all_k), size=int(s), replace=False)
        members.append(KGraph(n, k, rows=all_k[np.sort(pick)]))
    return KFamily(n, k, tuple(members))


# ---------------------------------------------------------------------------
# closeness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClosenessReport:
    distance: int
    witness: tuple[int, ...]
    epsilon: Fraction
    exact: bool = True
    complete_colors: tuple[int, ...] = ()

    def to_record(self) -> dict:
        return {
            "distance": self.distance,
            "epsilon": {"num": self.epsilon.numerator, "den": self.epsilon.denominator},
            "witness": [w + 1 for w in self.witness],
            "complete_colors": [c + 1 for c in self.complete_colors],
            "mode": "exact" if self.exact else "upper bound",
        }


def _cover_costs(H: PartiteHypergraph, cover_masks: np.ndarray, t: int):
    """Per (cover, colour): missing edges if the colour plays an F_t colour / a complete colour."""
    n, k = H.vsize, H.k
    ground_bits = np.zeros(len(H), np.int64)
    for col in range(k):
        ground_bits |= np.left_shift(np.int64(1), H.bodies[:, col])
    meet = kernels.count_by_color(ground_bits, H.colors, H.qsize, cover_masks, inside=False)
    per_color_target = comb(n, k) - comb(n - t, k)
    deg = np.bincount(H.colors, minlength=H.qsize) if len(H) else np.zeros(H.qsize, np.int64)
    as_ft = per_color_target - meet
    as_complete = comb(n, k) - deg[None, :]
    return as_ft, np.broadcast_to(as_complete, as_ft.shape)


def _assign(as_ft_row, as_complete_row, t):
    """Best split of the colours into ``t`` F_t-type colours and the rest complete."""
    q = len(as_ft_row)
    if q == t:
        return int(as_ft_row.sum()), ()
    gain = as_complete_row - as_ft_row
    order = np.lexsort((np.arange(q), gain))
    complete = np.sort(order[: q - t])
    total = int(as_ft_row.sum() + gain[complete].sum())
    return total, tuple(int(c) for c in complete)


def closeness_to_extremal(H: PartiteHypergraph, t: int, exact: bool | None = None) -> ClosenessReport:
    """Missing-edge distance from ``H`` to the nearest copy of ``F_t(k,n)`` (or ``H_t(k,n)``).

    A copy is fixed by the t ground vertices ``W`` playing the role of ``range(t)``;
    all colours of the target share one neighbourhood, so colour relabelings do
    not matter. When ``H`` has more than ``t`` colours the extra ones are matched
    against complete colours, choosing the cheapest assignment. Exact mode
    enumerates every ``W`` (``n <= 16``); otherwise ``W`` is picked greedily by
    degree and the distance is only an upper bound.
    """
    n, k = H.vsize, H.k
    if not 1 <= t <= min(H.qsize, n):
        raise InputError(f"t={t} does not fit a graph with {H.qsize} colours and {n} ground vertices")
    if H.qsize != t and H.qsize != t + padding_colors(n, k, t):
        raise InputError(f"{H.qsize} colours match neither F_t ({t}) nor H_t ({t + padding_colors(n, k, t)})")
    if exact is None:
        exact = n <= EXACT_CLOSENESS_MAX_N
    if exact and n > 62:
        raise InputError("exact closeness needs n <= 62")
    target_edges = t * (comb(n, k) - comb(n - t, k)) + (H.qsize - t) * comb(n, k)

    if exact:
        covers = list(itertools.combinations(range(n), t))
        masks = np.array([sum(1 << w for w in c) for c in covers], np.int64)
        best = None
        for lo in range(0, len(covers), 4096):
            as_ft, as_complete = _cover_costs(H, masks[lo:lo + 4096], t)
            for i in range(len(as_ft)):
                total, complete = _assign(as_ft[i], as_complete[i], t)
                if best is None or total < best[0]:
                    best = (total, covers[lo + i], complete)
        distance, witness, complete = best
    else:
        deg = np.bincount(H.bodies.ravel(), minlength=n) if len(H) else np.zeros(n, np.int64)
        order = np.lexsort((np.arange(n), -deg))
        witness = tuple(sorted(int(v) for v in order[:t]))
        cover = np.zeros(n, bool)
        cover[list(witness)] = True
        deg_c = np.bincount(H.colors, minlength=H.qsize) if len(H) else np.zeros(H.qsize, np.int64)
        meets = cover[H.bodies].any(axis=1) if len(H) else np.zeros(0, bool)
        meet_c = np.bincount(H.colors[meets], minlength=H.qsize) if len(H) else np.zeros(H.qsize, np.int64)
        as_ft = (comb(n, k) - comb(n - t, k)) - meet_c
        distance, complete = _assign(as_ft, comb(n, k) - deg_c, t)
    eps = Fraction(distance, target_edges) if target_edges else Fraction(0)
    return ClosenessReport(int(distance), tuple(witness), eps, exact, tuple(complete))


def is_close(report: ClosenessReport, epsilon) -> bool:
    return report.epsilon <= as_fraction(epsilon)
