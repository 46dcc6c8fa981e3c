"""Hot inner loops.

Every kernel has a numba version and a plain Python/numpy version with
identical results; :data:`rainbow._jit.USE_NUMBA` picks one. Bit vectors are
``int64`` words (bit ``v & 63`` of word ``v >> 6``) so that numba never mixes
signed and unsigned arithmetic.
"""

import numpy as np

from rainbow import _jit
from rainbow._jit import njit

NO_TARGET = np.iinfo(np.int64).max


# --------------------------------------------------------------------------
# branch and bound for maximum matchings
#
# Edges are grouped by their smallest vertex (CSR offsets ``starts``). The
# search walks vertices in increasing order; at the lowest uncovered vertex v
# that still starts an edge it either takes one of those edges or leaves v
# uncovered for good. Every matching is visited at most once.
# --------------------------------------------------------------------------


@njit
def _advance(row, p, free, starts, nverts):
    v = p
    while v < nverts:
        if (row[v >> 6] >> (v & 63)) & 1 == 0:
            if starts[v + 1] > starts[v]:
                break
            free -= 1
        v += 1
    return v, free


@njit
def _bb_numba(starts, masks, nverts, arity, target, node_cap, init_mask, start_v, base_size):
    W = masks.shape[1]
    suffix = np.zeros(nverts + 1, np.int64)
    for v in range(nverts - 1, -1, -1):
        suffix[v] = suffix[v + 1] + (1 if starts[v + 1] > starts[v] else 0)
    cap = nverts + 2
    smask = np.zeros((cap, W), np.int64)
    sv = np.zeros(cap, np.int64)
    sj = np.zeros(cap, np.int64)
    ssize = np.zeros(cap, np.int64)
    sfree = np.zeros(cap, np.int64)
    chosen = np.full(cap, -1, np.int64)
    best_edges = np.full(cap, -1, np.int64)
    best = base_size
    nbest = 0
    nodes = 0
    exhausted = False

    free = 0
    for w in range(W):
        smask[0, w] = init_mask[w]
    for v in range(start_v, nverts):
        if (init_mask[v >> 6] >> (v & 63)) & 1 == 0:
            free += 1
    v, free = _advance(smask[0], start_v, free, starts, nverts)
    if v >= nverts or best >= target or base_size + min(suffix[v], free // arity) <= best:
        return best, best_edges[:0].copy(), nodes, exhausted
    sv[0] = v
    sfree[0] = free
    ssize[0] = base_size
    sj[0] = starts[v]
    d = 0
    while d >= 0:
        v = sv[d]
        j = sj[d]
        end = starts[v + 1]
        if j > end:
            d -= 1
            continue
        sj[d] = j + 1
        nd = d + 1
        if j < end:
            clash = False
            for w in range(W):
                if masks[j, w] & smask[d, w] != 0:
                    clash = True
                    break
            if clash:
                continue
            chosen[d] = j
            child_size = ssize[d] + 1
            child_free = sfree[d] - arity
            for w in range(W):
                smask[nd, w] = smask[d, w] | masks[j, w]
        else:
            chosen[d] = -1
            child_size = ssize[d]
            child_free = sfree[d] - 1
            for w in range(W):
                smask[nd, w] = smask[d, w]
        nodes += 1
        if nodes > node_cap:
            exhausted = True
            break
        if child_size > best:
            best = child_size
            nbest = 0
            for i in range(nd):
                if chosen[i] >= 0:
                    best_edges[nbest] = chosen[i]
                    nbest += 1
            if best >= target:
                break
        cv, cf = _advance(smask[nd], v + 1, child_free, starts, nverts)
        if cv >= nverts:
            continue
        if child_size + min(suffix[cv], cf // arity) <= best:
            continue
        sv[nd] = cv
        sfree[nd] = cf
        ssize[nd] = child_size
        sj[nd] = starts[cv]
        d = nd
    return best, best_edges[:nbest].copy(), nodes, exhausted


def _to_int(words):
    out = 0
    for w, word in enumerate(np.asarray(words, dtype=np.int64).view(np.uint64)):
        out |= int(word) << (64 * w)
    return out


def _bb_python(starts, masks, nverts, arity, target, node_cap, init_mask, start_v, base_size):
    starts = [int(s) for s in starts]
    emask = [_to_int(row) for row in masks]
    suffix = [0] * (nverts + 1)
    for v in range(nverts - 1, -1, -1):
        suffix[v] = suffix[v + 1] + (1 if starts[v + 1] > starts[v] else 0)

    def advance(mask, p, free):
        v = p
        while v < nverts:
            if not (mask >> v) & 1:
                if starts[v + 1] > starts[v]:
                    break
                free -= 1
            v += 1
        return v, free

    mask0 = _to_int(init_mask)
    free = sum(1 for v in range(start_v, nverts) if not (mask0 >> v) & 1)
    best, best_path, nodes = base_size, [], 0
    v, free = advance(mask0, start_v, free)
    if v >= nverts or best >= target or base_size + min(suffix[v], free // arity) <= best:
        return best, np.zeros(0, np.int64), nodes, False
    # frame: [v, next option, mask, size, free]
    stack = [[v, starts[v], mask0, base_size, free]]
    chosen = []
    exhausted = False
    while stack:
        frame = stack[-1]
        v, j, mask, size, free = frame
        end = starts[v + 1]
        if j > end:
            stack.pop()
            if chosen:
                chosen.pop()
            continue
        frame[1] = j + 1
        if j < end:
            if emask[j] & mask:
                continue
            pick, child_mask, child_size, child_free = j, mask | emask[j], size + 1, free - arity
        else:
            pick, child_mask, child_size, child_free = -1, mask, size, free - 1
        nodes += 1
        if nodes > node_cap:
            exhausted = True
            break
        path = chosen[: len(stack) - 1] + [pick]
        if child_size > best:
            best = child_size
            best_path = [e for e in path if e >= 0]
            if best >= target:
                break
        cv, cf = advance(child_mask, v + 1, child_free)
        if cv >= nverts or child_size + min(suffix[cv], cf // arity) <= best:
            continue
        del chosen[len(stack) - 1:]
        chosen.append(pick)
        stack.append([cv, starts[cv], child_mask, child_size, cf])
    return best, np.asarray(best_path, dtype=np.int64), nodes, exhausted


def bb_search(starts, masks, nverts, arity, target=NO_TARGET, node_cap=10**8,
              init_mask=None, start_v=0, base_size=0):
    """Maximum matching by branch and bound.

    Returns ``(size, edge_indices, nodes, exhausted)``; ``size`` counts
    ``base_size`` plus the chosen edges, and the search stops early as soon as
    ``target`` is reached.
    """
    starts = np.ascontiguousarray(starts, dtype=np.int64)
    masks = np.ascontiguousarray(masks, dtype=np.int64)
    if init_mask is None:
        init_mask = np.zeros(masks.shape[1], np.int64)
    init_mask = np.ascontiguousarray(init_mask, dtype=np.int64)
    fn = _bb_numba if _jit.USE_NUMBA else _bb_python
    best, idx, nodes, exhausted = fn(starts, masks, int(nverts), int(arity), int(target),
                                     int(node_cap), init_mask, int(start_v), int(base_size))
    return int(best), idx, int(nodes), bool(exhausted)


@njit
def _bb_batch_numba(starts, masks3, nverts, arity, target, node_cap):
    B = masks3.shape[0]
    sizes = np.zeros(B, np.int64)
    exhausted = np.zeros(B, np.bool_)
    init = np.zeros(masks3.shape[2], np.int64)
    for b in range(B):
        best, _, _, ex = _bb_numba(starts, masks3[b], nverts, arity, target, node_cap, init, 0, 0)
        sizes[b] = best
        exhausted[b] = ex
    return sizes, exhausted


def bb_batch(starts, masks3, nverts, arity, target=NO_TARGET, node_cap=10**8):
    """Run :func:`bb_search` over many instances sharing one CSR layout.

    ``masks3`` has shape ``(instances, edges, words)``. Returns the matching
    sizes and the per-instance budget flags.
    """
    starts = np.ascontiguousarray(starts, dtype=np.int64)
    masks3 = np.ascontiguousarray(masks3, dtype=np.int64)
    if _jit.USE_NUMBA:
        return _bb_batch_numba(starts, masks3, int(nverts), int(arity), int(target), int(node_cap))
    init = np.zeros(masks3.shape[2], np.int64)
    sizes = np.zeros(masks3.shape[0], np.int64)
    exhausted = np.zeros(masks3.shape[0], bool)
    for b in range(masks3.shape[0]):
        best, _, _, ex = _bb_python(starts, masks3[b], nverts, arity, target, node_cap, init, 0, 0)
        sizes[b] = best
        exhausted[b] = ex
    return sizes, exhausted


# --------------------------------------------------------------------------
# per-colour edge counts against many vertex sets (ground side fits one word)
# --------------------------------------------------------------------------


@njit
def _count_numba(body_masks, colors, qsize, set_masks, inside):
    P = set_masks.shape[0]
    out = np.zeros((P, qsize), np.int64)
    for p in range(P):
        s = set_masks[p]
        for e in range(body_masks.shape[0]):
            b = body_masks[e]
            if inside:
                hit = (b & ~s) == 0
            else:
                hit = (b & s) != 0
            if hit:
                out[p, colors[e]] += 1
    return out


def _count_numpy(body_masks, colors, qsize, set_masks, inside, chunk=512):
    out = np.zeros((len(set_masks), qsize), np.int64)
    onehot = np.zeros((len(body_masks), qsize), np.int64)
    onehot[np.arange(len(body_masks)), colors] = 1
    for lo in range(0, len(set_masks), chunk):
        s = set_masks[lo:lo + chunk, None]
        if inside:
            hit = (body_masks[None, :] & ~s) == 0
        else:
            hit = (body_masks[None, :] & s) != 0
        out[lo:lo + chunk] = hit.astype(np.int64) @ onehot
    return out


def count_by_color(body_masks, colors, qsize, set_masks, inside=False):
    """``out[p, c]``: edges of colour ``c`` whose body meets (or lies inside) set ``p``."""
    body_masks = np.ascontiguousarray(body_masks, dtype=np.int64)
    colors = np.ascontiguousarray(colors, dtype=np.int64)
    set_masks = np.ascontiguousarray(set_masks, dtype=np.int64)
    if _jit.USE_NUMBA:
        return _count_numba(body_masks, colors, int(qsize), set_masks, bool(inside))
    return _count_numpy(body_masks, colors, int(qsize), set_masks, bool(inside))
