"""Slow, independent reference implementations used to check the package.

Nothing here imports the solvers under test: edges are plain tuples and every
answer comes from direct enumeration or from scipy's LP solver.
"""

from __future__ import annotations

import itertools
from math import comb

import numpy as np
from scipy.optimize import linprog


def nu(edges) -> int:
    """Maximum matching size by recursion on the lowest vertex."""
    edges = [frozenset(e) for e in edges]

    def best(avail):
        if not avail:
            return 0
        v = min(min(e) for e in avail)
        with_v = [e for e in avail if v in e]
        without = [e for e in avail if v not in e]
        top = best(without)
        for e in with_v:
            top = max(top, 1 + best([f for f in without if not (f & e)]))
        return top

    return best(edges)


def has_rainbow(families) -> bool:
    """Pick one edge per family, pairwise disjoint, by product search with pruning."""
    def go(i, used):
        if i == len(families):
            return True
        return any(go(i + 1, used | set(e)) for e in families[i] if not used.intersection(e))

    return go(0, set())


def pairs_meeting(n, k, W):
    W = set(W)
    return [e for e in itertools.combinations(range(n), k) if W.intersection(e)]


def closeness(families, n, k, t):
    """min over t-sets W of the number of F_t(k,n) edges (cover W) missing from the family graph."""
    sets = [set(map(tuple, F)) for F in families]
    best = None
    for W in itertools.combinations(range(n), t):
        need = pairs_meeting(n, k, W)
        miss = sum(1 for F in sets for e in need if e not in F)
        best = miss if best is None else min(best, miss)
    return best


def lp_value(rows, nverts) -> float:
    """Fractional matching number from the explicit incidence matrix."""
    if not rows:
        return 0.0
    A = np.zeros((nverts, len(rows)))
    for j, r in enumerate(rows):
        for v in r:
            A[v, j] = 1
    res = linprog(-np.ones(len(rows)), A_ub=A, b_ub=np.ones(nverts), bounds=(0, 1), method="highs")
    assert res.status == 0
    return -res.fun


def perfect_on(rows, T) -> bool:
    """Does the set of rows restricted to T contain a perfect matching of T?"""
    T = frozenset(T)
    inside = [frozenset(r) for r in rows if frozenset(r) <= T]
    size = len(next(iter(inside))) if inside else None

    def go(left):
        if not left:
            return True
        v = min(left)
        return any(go(left - e) for e in inside if v in e and e <= left)

    if not T:
        return True
    if size is None or len(T) % size:
        return False
    return go(T)


def stable(edges, n) -> bool:
    """Upward closure checked over all pairs e <= f coordinatewise."""
    es = {tuple(sorted(e)) for e in edges}
    k = len(next(iter(es))) if es else 0
    for e in es:
        for f in itertools.combinations(range(n), k):
            if all(a <= b for a, b in zip(e, f)) and f not in es:
                return False
    return True


def first_threshold(n, k, t):
    return comb(n, k) - comb(n - t + 1, k)
