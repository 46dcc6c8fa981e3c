"""Exact simplex for packing LPs ``max 1.h  s.t.  A h <= 1, h >= 0`` with 0/1 ``A``.

The tableau is kept as integers over a single common denominator (integer
pivoting): after each pivot every entry is a minor of the original matrix,
so divisions are exact and no Fraction objects appear inside the loop.
Bland's rule guarantees termination.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np


class LPError(RuntimeError):
    pass


def _less(a_num, a_den, b_num, b_den) -> bool:
    # both denominators positive
    return a_num * b_den < b_num * a_den


def solve_packing(A: np.ndarray, max_pivots: int | None = None):
    """Solve the packing LP exactly.

    ``A`` is a ``(rows, cols)`` 0/1 matrix. Returns ``(x, y, value)``: an optimal
    primal ``x`` (length ``cols``), an optimal dual ``y`` (length ``rows``) for
    ``min 1.y  s.t.  A^T y >= 1, y >= 0``, and the common optimum, all as
    :class:`~fractions.Fraction`.
    """
    A = np.asarray(A, dtype=np.int64)
    m, n = A.shape
    if n == 0:
        return [], [Fraction(0)] * m, Fraction(0)
    width = n + m + 1
    rows = [[int(v) for v in A[i]] + [int(j == i) for j in range(m)] + [1] for i in range(m)]
    rows.append([-1] * n + [0] * (m + 1))
    T = np.array(rows, dtype=object)
    basis = list(range(n, n + m))
    D = 1
    pivots = 0
    rhs = width - 1
    while True:
        neg = np.flatnonzero(T[m, :rhs] < 0)
        if len(neg) == 0:
            break
        c = int(neg[0])
        r = -1
        for i in range(m):
            a = T[i, c]
            if a > 0:
                if r < 0:
                    r = i
                    continue
                b_i, a_r, b_r = T[i, rhs], T[r, c], T[r, rhs]
                if _less(b_i, a, b_r, a_r) or (b_i * a_r == b_r * a and basis[i] < basis[r]):
                    r = i
        if r < 0:
            raise LPError("packing LP reported unbounded")
        p = T[r, c]
        pivot_row = T[r].copy()
        col = T[:, c].copy()
        T = (T * p - np.outer(col, pivot_row)) // D
        T[r] = pivot_row
        D = p
        basis[r] = c
        pivots += 1
        if max_pivots is not None and pivots > max_pivots:
            raise LPError(f"no optimum after {max_pivots} pivots")

    x = [Fraction(0)] * n
    for i, b in enumerate(basis):
        if b < n:
            x[b] = Fraction(int(T[i, rhs]), int(D))
    y = [Fraction(int(T[m, n + i]), int(D)) for i in range(m)]
    value = Fraction(int(T[m, rhs]), int(D))
    return x, y, value


def solve_packing_float(A: np.ndarray):
    """Floating-point solve through the HiGHS interior point method (with crossover); returns ``(x, y, value)`` as floats.

    ``A`` may be dense or a scipy sparse matrix.
    """
    from scipy import sparse
    from scipy.optimize import linprog

    A = sparse.csr_matrix(A, dtype=float) if sparse.issparse(A) else np.asarray(A, dtype=float)
    m, n = A.shape
    if n == 0:
        return np.zeros(0), np.zeros(m), 0.0
    res = linprog(-np.ones(n), A_ub=A, b_ub=np.ones(m), bounds=(0, None), method="highs-ipm")
    if res.status != 0:
        raise LPError(f"HiGHS failed: {res.message}")
    y = -np.asarray(res.ineqlin.marginals)
    return res.x, y, -res.fun
