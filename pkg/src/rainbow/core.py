"""Edge, hypergraph and matching containers.

Two hypergraph kinds exist: :class:`KGraph` (a k-graph on ``range(n)``) and
:class:`PartiteHypergraph` (a (1,k)-partite (k+1)-graph with colour class Q
and ground class V). Both keep their edges as a lexicographically sorted
``(m, arity)`` array of *global* vertex ids. For a partite graph the colours
come first: colour ``i`` is vertex ``i`` and ground vertex ``v`` is vertex
``qsize + v``, so the smallest vertex of every edge is its colour.

Containers are immutable after construction. Vertices are 0-based here; the
file formats in :mod:`rainbow.io` are 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable

import numpy as np


class InputError(ValueError):
    """Malformed hypergraph data or an out-of-range vertex."""


def as_edge(vertices: Iterable[int], arity: int | None = None) -> tuple[int, ...]:
    """Sorted tuple form of an edge; rejects repeated vertices."""
    e = tuple(sorted(int(v) for v in vertices))
    if len(set(e)) != len(e):
        raise InputError(f"edge {e} repeats a vertex")
    if arity is not None and len(e) != arity:
        raise InputError(f"edge {e} has {len(e)} vertices, expected {arity}")
    return e


def _sorted_unique_rows(rows: np.ndarray, arity: int) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.int64).reshape(-1, arity)
    if len(rows) == 0:
        return np.zeros((0, arity), np.int64)
    rows = np.sort(rows, axis=1)
    if arity > 1 and np.any(rows[:, 1:] == rows[:, :-1]):
        raise InputError("edge repeats a vertex")
    return np.unique(rows, axis=0)


def as_fraction(x) -> Fraction:
    """Exact rational; floats are read through their shortest decimal form (0.1 -> 1/10)."""
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def words_for(nbits: int) -> int:
    return max(1, (nbits + 63) // 64)


def bitmask_rows(rows: np.ndarray, nbits: int) -> np.ndarray:
    """``(m, words)`` int64 bit vectors, one per row of vertex ids."""
    out = np.zeros((len(rows), words_for(nbits)), np.int64)
    for col in range(rows.shape[1] if rows.ndim == 2 else 0):
        v = rows[:, col]
        np.bitwise_or.at(out, (np.arange(len(rows)), v >> 6),
                         np.left_shift(np.int64(1), (v & 63).astype(np.int64)))
    return out


def to_bits(vertices: Iterable[int]) -> int:
    out = 0
    for v in vertices:
        out |= 1 << int(v)
    return out


def from_bits(mask: int) -> list[int]:
    out = []
    v = 0
    while mask:
        if mask & 1:
            out.append(v)
        mask >>= 1
        v += 1
    return out


class _Hypergraph:
    arity: int
    nverts: int

    def _init_rows(self, rows: np.ndarray, vertices) -> None:
        rows = _sorted_unique_rows(rows, self.arity)
        if len(rows) and (rows.min() < 0 or rows.max() >= self.nverts):
            raise InputError("edge vertex out of range")
        rows.setflags(write=False)
        self.rows = rows
        if vertices is None:
            self.vertices = frozenset(range(self.nverts))
        else:
            self.vertices = frozenset(int(v) for v in vertices)
            if self.vertices and (min(self.vertices) < 0 or max(self.vertices) >= self.nverts):
                raise InputError("vertex set out of range")
            if len(rows):
                inside = np.zeros(self.nverts, bool)
                inside[list(self.vertices)] = True
                if not inside[rows].all():
                    raise InputError("edge uses a vertex outside the vertex set")

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def num_edges(self) -> int:
        return len(self.rows)

    @cached_property
    def masks(self) -> np.ndarray:
        m = bitmask_rows(self.rows, self.nverts)
        m.setflags(write=False)
        return m

    @cached_property
    def keys(self) -> np.ndarray:
        base = np.int64(self.nverts)
        if float(self.nverts) ** self.arity >= 2.0 ** 62:
            base = self.nverts
            keys = np.array([sum(int(x) * base ** (self.arity - 1 - i) for i, x in enumerate(r))
                             for r in self.rows], dtype=object)
        else:
            keys = np.zeros(len(self.rows), np.int64)
            for col in range(self.arity):
                keys = keys * base + self.rows[:, col]
        return keys

    def row_keys(self, rows: np.ndarray) -> np.ndarray:
        rows = np.sort(np.asarray(rows, dtype=np.int64).reshape(-1, self.arity), axis=1)
        keys = np.zeros(len(rows), np.int64)
        for col in range(self.arity):
            keys = keys * np.int64(self.nverts) + rows[:, col]
        return keys

    def contains_rows(self, rows: np.ndarray) -> np.ndarray:
        """Vectorised membership of global-id rows."""
        rows = np.asarray(rows, dtype=np.int64).reshape(-1, self.arity)
        if len(self.rows) == 0 or len(rows) == 0:
            return np.zeros(len(rows), bool)
        if self.keys.dtype == object:
            have = self.row_set
            return np.array([tuple(sorted(r)) in have for r in rows.tolist()], bool)
        k = self.row_keys(rows)
        pos = np.searchsorted(self.keys, k)
        pos = np.minimum(pos, len(self.keys) - 1)
        return self.keys[pos] == k

    @cached_property
    def row_set(self) -> frozenset:
        return frozenset(map(tuple, self.rows.tolist()))

    def has_row(self, row) -> bool:
        return tuple(sorted(row)) in self.row_set

    def vertex_degrees(self) -> np.ndarray:
        return np.bincount(self.rows.ravel(), minlength=self.nverts)

    def _check_vertex(self, v: int) -> int:
        v = int(v)
        if not 0 <= v < self.nverts:
            raise InputError(f"vertex {v} out of range 0..{self.nverts - 1}")
        return v

    def _membership(self, S) -> np.ndarray:
        inside = np.zeros(self.nverts, bool)
        S = [int(v) for v in S]
        if S:
            if min(S) < 0 or max(S) >= self.nverts:
                raise InputError("vertex set out of range")
            inside[S] = True
        return inside

    def rows_inside(self, S) -> np.ndarray:
        """Boolean selector of edges contained in ``S``."""
        if len(self.rows) == 0:
            return np.zeros(0, bool)
        return self._membership(S)[self.rows].all(axis=1)


class KGraph(_Hypergraph):
    """A k-uniform hypergraph on ``range(n)``."""

    def __init__(self, n: int, k: int, edges: Iterable[Iterable[int]] = (), *, vertices=None,
                 rows: np.ndarray | None = None):
        if n < 0 or k < 1:
            raise InputError(f"need n >= 0 and k >= 1, got n={n}, k={k}")
        self.n, self.k = int(n), int(k)
        self.arity = self.k
        self.nverts = self.n
        if rows is None:
            rows = np.array([as_edge(e, self.k) for e in edges], dtype=np.int64)
        self._init_rows(rows, vertices)

    @property
    def edges(self) -> list[tuple[int, ...]]:
        return [tuple(r) for r in self.rows.tolist()]

    @cached_property
    def edge_set(self) -> frozenset:
        return self.row_set

    def __contains__(self, edge) -> bool:
        return tuple(sorted(edge)) in self.row_set

    def native(self, row) -> tuple[int, ...]:
        return tuple(int(v) for v in row)

    def global_row(self, edge) -> tuple[int, ...]:
        return as_edge(edge, self.k)

    def with_rows(self, rows, vertices=None) -> "KGraph":
        return KGraph(self.n, self.k, rows=rows, vertices=self.vertices if vertices is None else vertices)

    def __eq__(self, other) -> bool:
        return (isinstance(other, KGraph) and (self.n, self.k) == (other.n, other.k)
                and self.vertices == other.vertices and np.array_equal(self.rows, other.rows))

    def __hash__(self):
        return hash((self.n, self.k, self.rows.tobytes()))

    def __repr__(self) -> str:
        return f"KGraph(n={self.n}, k={self.k}, edges={len(self)})"


class PartiteHypergraph(_Hypergraph):
    """A (1,k)-partite (k+1)-graph with ``qsize`` colours and ``vsize`` ground vertices.

    Edges are given natively as ``(colour, v1, ..., vk)``.
    """

    def __init__(self, qsize: int, vsize: int, k: int, edges: Iterable[Iterable[int]] = (), *,
                 vertices=None, balanced: bool = False, rows: np.ndarray | None = None):
        if qsize < 0 or vsize < 0 or k < 1:
            raise InputError(f"bad class sizes q={qsize}, n={vsize}, k={k}")
        self.qsize, self.vsize, self.k = int(qsize), int(vsize), int(k)
        self.arity = self.k + 1
        self.nverts = self.qsize + self.vsize
        if balanced and self.vsize != self.k * self.qsize:
            raise InputError(f"balanced graph needs vsize = k*qsize, got {vsize} != {k}*{qsize}")
        self.balanced = balanced
        if rows is None:
            rows = np.array([self.global_row(e) for e in edges], dtype=np.int64).reshape(-1, self.arity)
        rows = np.asarray(rows, dtype=np.int64).reshape(-1, self.arity)
        if len(rows):
            srt = np.sort(rows, axis=1)
            if np.any(srt[:, 0] >= self.qsize) or np.any(srt[:, 1:] < self.qsize):
                raise InputError("each edge needs exactly one colour and k ground vertices")
        self._init_rows(rows, vertices)

    # vertex numbering -----------------------------------------------------
    def color(self, i: int) -> int:
        return int(i)

    def ground(self, v: int) -> int:
        return self.qsize + int(v)

    def is_color(self, g: int) -> bool:
        return g < self.qsize

    @property
    def Q(self) -> frozenset:
        return frozenset(v for v in self.vertices if v < self.qsize)

    @property
    def V(self) -> frozenset:
        return frozenset(v for v in self.vertices if v >= self.qsize)

    def global_row(self, edge) -> tuple[int, ...]:
        edge = tuple(int(x) for x in edge)
        if len(edge) != self.arity:
            raise InputError(f"partite edge {edge} needs {self.arity} entries")
        c, body = edge[0], as_edge(edge[1:], self.k)
        if not 0 <= c < self.qsize or (body and (body[0] < 0 or body[-1] >= self.vsize)):
            raise InputError(f"partite edge {edge} out of range")
        return (c,) + tuple(self.qsize + v for v in body)

    def native(self, row) -> tuple[int, ...]:
        row = sorted(int(v) for v in row)
        return (row[0],) + tuple(v - self.qsize for v in row[1:])

    @property
    def colors(self) -> np.ndarray:
        return self.rows[:, 0]

    @property
    def bodies(self) -> np.ndarray:
        return self.rows[:, 1:] - self.qsize

    @property
    def edges(self) -> list[tuple[int, ...]]:
        return [self.native(r) for r in self.rows.tolist()]

    @cached_property
    def edge_set(self) -> frozenset:
        return frozenset(self.edges)

    def __contains__(self, edge) -> bool:
        try:
            return self.global_row(edge) in self.row_set
        except InputError:
            return False

    def color_family(self, i: int) -> KGraph:
        """The neighbourhood of colour ``i`` as a k-graph on the ground set."""
        sel = self.colors == i
        return KGraph(self.vsize, self.k, rows=self.bodies[sel])

    def with_rows(self, rows, vertices=None) -> "PartiteHypergraph":
        return PartiteHypergraph(self.qsize, self.vsize, self.k, rows=rows,
                                 vertices=self.vertices if vertices is None else vertices)

    def __eq__(self, other) -> bool:
        return (isinstance(other, PartiteHypergraph)
                and (self.qsize, self.vsize, self.k) == (other.qsize, other.vsize, other.k)
                and self.vertices == other.vertices and np.array_equal(self.rows, other.rows))

    def __hash__(self):
        return hash((self.qsize, self.vsize, self.k, self.rows.tobytes()))

    def __repr__(self) -> str:
        return f"PartiteHypergraph(q={self.qsize}, n={self.vsize}, k={self.k}, edges={len(self)})"


Hypergraph = KGraph | PartiteHypergraph


@dataclass(frozen=True)
class Matching:
    """Pairwise disjoint edges (native form) with the union of their global vertex ids."""

    edges: tuple
    covered: int

    @classmethod
    def of(cls, H: _Hypergraph, edges, check_host: bool = True) -> "Matching":
        covered = 0
        native = []
        for e in edges:
            row = H.global_row(e)
            if check_host and row not in H.row_set:
                raise InputError(f"{tuple(e)} is not an edge of the host")
            bits = to_bits(row)
            if covered & bits:
                raise InputError(f"edge {tuple(e)} overlaps the matching")
            covered |= bits
            native.append(H.native(row))
        return cls(tuple(native), covered)

    def __len__(self) -> int:
        return len(self.edges)

    def __iter__(self):
        return iter(self.edges)

    def vertex_ids(self) -> list[int]:
        return from_bits(self.covered)


# ---------------------------------------------------------------------------
# basic queries
# ---------------------------------------------------------------------------


def degree(H: _Hypergraph, v: int) -> int:
    """Number of edges containing vertex ``v`` (global id)."""
    v = H._check_vertex(v)
    if len(H.rows) == 0:
        return 0
    return int(np.count_nonzero((H.rows == v).any(axis=1)))


def neighborhood(H: _Hypergraph, v: int) -> frozenset:
    """``{S : S + v is an edge}``, members as sorted tuples of global ids.

    For a colour vertex of a partite graph use :meth:`PartiteHypergraph.color_family`
    to get the same sets over ground indices.
    """
    v = H._check_vertex(v)
    if len(H.rows) == 0:
        return frozenset()
    sel = (H.rows == v).any(axis=1)
    out = set()
    for row in H.rows[sel].tolist():
        out.add(tuple(x for x in row if x != v))
    return frozenset(out)


def induced(H: _Hypergraph, S) -> _Hypergraph:
    """``H[S]``: vertex set ``S``, edges of ``H`` lying inside ``S``."""
    S = frozenset(int(v) for v in S)
    keep = H.rows_inside(S)
    return H.with_rows(H.rows[keep], vertices=S)


def is_independent(H: _Hypergraph, S) -> bool:
    """True iff no edge of ``H`` lies inside ``S``."""
    return not H.rows_inside(S).any()


def is_stable(F: KGraph, labeling=None) -> bool:
    """Shift-closure of the edge set under the coordinatewise order.

    ``labeling[v]`` gives the position of vertex ``v`` in the order (identity by
    default). Checking single-coordinate increments suffices.
    """
    n, k = F.n, F.k
    if labeling is None:
        labeling = list(range(n))
    labeling = [int(x) for x in labeling]
    if sorted(labeling) != list(range(n)):
        raise InputError("labeling must be a permutation of range(n)")
    edges = {tuple(sorted(labeling[v] for v in e)) for e in F.rows.tolist()}
    for e in edges:
        for i in range(k):
            nxt = e[i] + 1
            if nxt >= n or (i + 1 < k and nxt == e[i + 1]):
                continue
            if e[:i] + (nxt,) + e[i + 1:] not in edges:
                return False
    return True


def validate_matching(H: _Hypergraph, edges) -> Matching:
    """Build a :class:`Matching`, raising :class:`InputError` if it is not one in ``H``."""
    return Matching.of(H, edges, check_host=True)


__all__ = [
    "InputError", "KGraph", "as_fraction", "PartiteHypergraph", "Matching", "as_edge", "degree",
    "neighborhood", "induced", "is_independent", "is_stable", "validate_matching",
    "to_bits", "from_bits", "bitmask_rows", "words_for",
]
