import itertools
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rainbow import _jit, kernels
from rainbow.core import PartiteHypergraph
from rainbow.exact import _csr, max_matching

needs_numba = pytest.mark.skipif(not _jit.HAVE_NUMBA, reason="numba not installed")


def both(fn, *args, **kw):
    saved = _jit.USE_NUMBA
    try:
        _jit.USE_NUMBA = True
        a = fn(*args, **kw)
        _jit.USE_NUMBA = False
        b = fn(*args, **kw)
    finally:
        _jit.USE_NUMBA = saved
    return a, b


@st.composite
def hosts(draw):
    q = draw(st.integers(1, 5))
    n = draw(st.integers(2, 9))
    k = draw(st.integers(1, min(3, n)))
    all_e = [(c, *b) for c in range(q) for b in itertools.combinations(range(n), k)]
    chosen = draw(st.lists(st.sampled_from(all_e), max_size=40, unique=True))
    return PartiteHypergraph(q, n, k, chosen)


@needs_numba
@given(hosts(), st.integers(0, 4))
def test_bb_search_paths_agree(H, target):
    if len(H) == 0:
        return
    starts = _csr(H)
    (s1, i1, n1, e1), (s2, i2, n2, e2) = both(kernels.bb_search, starts, H.masks, H.nverts, H.arity,
                                              target or kernels.NO_TARGET)
    assert (s1, n1, e1) == (s2, n2, e2)
    assert i1.tolist() == i2.tolist()


@needs_numba
@given(hosts())
def test_bb_search_paths_agree_under_budget(H):
    if len(H) == 0:
        return
    starts = _csr(H)
    a, b = both(kernels.bb_search, starts, H.masks, H.nverts, H.arity, kernels.NO_TARGET, 7)
    assert (a[0], a[2], a[3]) == (b[0], b[2], b[3])


@needs_numba
def test_bb_batch_paths_agree():
    rng = np.random.default_rng(0)
    t, n, k, s = 2, 6, 2, 6
    ksets = np.array(list(itertools.combinations(range(n), k)))
    idx = np.sort(np.argsort(rng.random((300, t, len(ksets))), axis=2)[:, :, :s], axis=2)
    bits = np.zeros(len(ksets), np.int64)
    for col in range(k):
        bits |= np.left_shift(np.int64(1), ksets[:, col] + t)
    masks = (bits[idx] | (np.int64(1) << np.arange(t))[None, :, None]).reshape(300, t * s, 1)
    starts = np.concatenate([np.arange(t + 1) * s, np.full(n, t * s)])
    (a_sizes, a_ex), (b_sizes, b_ex) = both(kernels.bb_batch, starts, masks, t + n, k + 1, t)
    assert a_sizes.tolist() == b_sizes.tolist() and a_ex.tolist() == b_ex.tolist()


@needs_numba
@given(hosts(), st.integers(1, 2**9 - 1), st.booleans())
def test_count_paths_agree(H, mask, inside):
    if len(H) == 0:
        return
    body = np.zeros(len(H), np.int64)
    for col in range(H.k):
        body |= np.left_shift(np.int64(1), H.bodies[:, col])
    sets = np.array([mask, mask ^ 0b101010101, 0], np.int64)
    a, b = both(kernels.count_by_color, body, H.colors, H.qsize, sets, inside)
    assert np.array_equal(a, b)
    # direct recount
    for p, s in enumerate(sets.tolist()):
        for c in range(H.qsize):
            want = sum(1 for e in H.edges if e[0] == c and
                       (all(s >> v & 1 for v in e[1:]) if inside else any(s >> v & 1 for v in e[1:])))
            assert a[p, c] == want


def test_multiword_masks():
    # more than 63 vertices forces two bit words
    H = PartiteHypergraph(35, 70, 2, [(c, 2 * c, 2 * c + 1) for c in range(35)])
    assert H.masks.shape[1] == 2
    assert max_matching(H).size == 35


def test_env_flag_selects_fallback():
    code = "from rainbow import _jit; print(_jit.USE_NUMBA)"
    env = dict(os.environ, RAINBOW_JIT="0")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "False"


@needs_numba
def test_benchmark_runs():
    script = os.path.join(os.path.dirname(__file__), os.pardir, "benchmarks", "bench_kernels.py")
    out = subprocess.run([sys.executable, script, "--repeat", "1", "--quick"], capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert "speedup" in out.stdout and "disagree" not in out.stdout
