"""Compare the numba kernels with the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 3] [--quick]

Both paths run in one process by flipping ``rainbow._jit.USE_NUMBA``; the
same switch is what ``RAINBOW_JIT=0`` sets at import time. Each case also
checks that the two paths return identical results.
"""

import argparse
import itertools
import time

import numpy as np

from rainbow import _jit, kernels
from rainbow.core import PartiteHypergraph
from rainbow.exact import _csr
from rainbow.generators import build_F, make_extremal_family, make_F_t


def complete_partite(q, n, k):
    return PartiteHypergraph(q, n, k, [(c, *b) for c in range(q) for b in itertools.combinations(range(n), k)])


def search_case(H, target=kernels.NO_TARGET, cap=2_000_000):
    starts = _csr(H)
    return lambda: kernels.bb_search(starts, H.masks, H.nverts, H.arity, target, cap)[:2]


def batch_case(n, t, k, B, seed=0):
    rng = np.random.default_rng(seed)
    ksets = np.array(list(itertools.combinations(range(n), k)))
    s = len(ksets) - 3
    idx = np.sort(np.argsort(rng.random((B, t, len(ksets))), axis=2)[:, :, :s], axis=2)
    bits = np.zeros(len(ksets), np.int64)
    for col in range(k):
        bits |= np.left_shift(np.int64(1), ksets[:, col] + t)
    masks = (bits[idx] | (np.int64(1) << np.arange(t))[None, :, None]).reshape(B, t * s, 1)
    starts = np.concatenate([np.arange(t + 1) * s, np.full(n, t * s)]).astype(np.int64)
    return lambda: kernels.bb_batch(starts, masks, t + n, k + 1, t, 10**6)


def count_case(H, sets=200, seed=0):
    rng = np.random.default_rng(seed)
    body = np.zeros(len(H), np.int64)
    for col in range(H.k):
        body |= np.left_shift(np.int64(1), H.bodies[:, col])
    masks = rng.integers(0, 2**min(H.vsize, 62), size=sets, dtype=np.int64)
    return lambda: kernels.count_by_color(body, H.colors, H.qsize, masks, True)


def timed(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return np.array_equal(a, b)
    return a == b


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="smaller instances")
    a = ap.parse_args(argv)
    if not _jit.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    small = a.quick
    cases = [
        # no rainbow matching exists, so the search must exhaust the tree
        ("bb_search extremal n=9 t=4", search_case(build_F(make_extremal_family(9, 2, 4)))),
        ("bb_search extremal k=3 n=10 t=3", search_case(build_F(make_extremal_family(10, 3, 3)))),
        ("bb_search F_t(3,9,3)", search_case(make_F_t(3, 9, 3))),
        ("bb_batch t=2 n=6", batch_case(6, 2, 2, 2000 if small else 20000)),
        ("count_by_color q=8 n=14", count_case(complete_partite(8, 14, 2))),
    ]
    saved = _jit.USE_NUMBA
    print(f"{'case':32s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s}")
    try:
        for name, fn in cases:
            _jit.USE_NUMBA = True
            fn()  # compile outside the timing
            jit_t, jit_out = timed(fn, a.repeat)
            _jit.USE_NUMBA = False
            py_t, py_out = timed(fn, a.repeat)
            if not same(jit_out, py_out):
                raise SystemExit(f"{name}: paths disagree")
            print(f"{name:32s} {jit_t:10.4f} {py_t:10.4f} {py_t / jit_t:8.1f}x")
    finally:
        _jit.USE_NUMBA = saved


if __name__ == "__main__":
    main()
