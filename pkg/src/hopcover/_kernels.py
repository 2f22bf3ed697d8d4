"""Numba kernels for the hot paths: label construction, batch distance
queries, and bias-matrix fills.

Each kernel has a pure-Python twin elsewhere in the package; the test suite
asserts they agree, so these stay free of behavior of their own. Label
entries live in flat chained arrays (head/tail/next) grown by doubling; BFS
state is epoch-stamped so rounds reuse the same buffers without O(n) clears.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange
from numba.typed import Dict
from numba.core import types

INF64 = 0x7FFFFFFF
BIAS_INF = 0xFFFF
BIAS_MASK = 0xFFFE
BIAS_FINITE_MAX = 0xFFF0
TOK_PAD = -1
TOK_VIRTUAL = -2


@njit(cache=True)
def pll_build(n, indptr, nbrs, max_distance):
    # Per-node label slots live contiguously in one slab (start/size/room),
    # relocated on growth, so prune queries walk sequential memory. The
    # prune test exits on the first certifying pair; entries are ordered by
    # ascending landmark (= descending degree), which finds witnesses fast.
    buf_cap = 8 * n + 64
    lm_buf = np.empty(buf_cap, np.int32)
    d_buf = np.empty(buf_cap, np.int32)
    bump = np.int64(0)
    start = np.zeros(n + 1, np.int64)
    size = np.zeros(n + 1, np.int32)
    room = np.zeros(n + 1, np.int32)

    dist = np.zeros(n + 1, np.int64)
    dist_epoch = np.zeros(n + 1, np.int64)
    T = np.zeros(n + 1, np.int64)
    T_epoch = np.zeros(n + 1, np.int64)
    queue = np.zeros(n + 1, np.int64)

    for src in range(1, n + 1):
        epoch = np.int64(src)
        s0 = start[src]
        for k in range(size[src]):
            w = lm_buf[s0 + k]
            T[w] = d_buf[s0 + k]
            T_epoch[w] = epoch
        T[src] = 0
        T_epoch[src] = epoch

        dist[src] = 0
        dist_epoch[src] = epoch
        queue[0] = src
        qhead = 0
        qtail = 1
        while qhead < qtail:
            u = queue[qhead]
            qhead += 1
            du = dist[u]
            pruned = False
            u0 = start[u]
            for k in range(size[u]):
                w = lm_buf[u0 + k]
                if T_epoch[w] == epoch and T[w] + d_buf[u0 + k] <= du:
                    pruned = True
                    break
            if pruned:
                continue
            if du > max_distance:
                return (
                    np.zeros(n + 2, np.int64),
                    np.empty(0, np.int32),
                    np.empty(0, np.int32),
                    du,
                )
            if size[u] == room[u]:
                new_room = np.int32(4) if room[u] == 0 else room[u] * np.int32(2)
                while bump + new_room > buf_cap:
                    buf_cap *= 2
                    grown_lm = np.empty(buf_cap, np.int32)
                    grown_lm[:bump] = lm_buf[:bump]
                    lm_buf = grown_lm
                    grown_d = np.empty(buf_cap, np.int32)
                    grown_d[:bump] = d_buf[:bump]
                    d_buf = grown_d
                for k in range(size[u]):
                    lm_buf[bump + k] = lm_buf[u0 + k]
                    d_buf[bump + k] = d_buf[u0 + k]
                start[u] = bump
                room[u] = new_room
                bump += new_room
                u0 = start[u]
            lm_buf[u0 + size[u]] = src
            d_buf[u0 + size[u]] = np.int32(du)
            size[u] += 1
            for k in range(indptr[u], indptr[u + 1]):
                w = nbrs[k]
                if dist_epoch[w] != epoch:
                    dist_epoch[w] = epoch
                    dist[w] = du + 1
                    queue[qtail] = w
                    qtail += 1

    out_indptr = np.zeros(n + 2, np.int64)
    for v in range(1, n + 1):
        out_indptr[v + 1] = out_indptr[v] + size[v]
    total = out_indptr[n + 1]
    out_lm = np.empty(total, np.int32)
    out_d = np.empty(total, np.int32)
    for v in range(1, n + 1):
        pos = out_indptr[v]
        v0 = start[v]
        for k in range(size[v]):
            out_lm[pos + k] = lm_buf[v0 + k]
            out_d[pos + k] = d_buf[v0 + k]
    return out_indptr, out_lm, out_d, np.int64(-1)


@njit(cache=True, inline="always")
def _pair_spd(lab_indptr, lab_lm, lab_d, a, b):
    i = lab_indptr[a]
    iend = lab_indptr[a + 1]
    j = lab_indptr[b]
    jend = lab_indptr[b + 1]
    best = np.int64(INF64)
    while i < iend and j < jend:
        wa = lab_lm[i]
        wb = lab_lm[j]
        if wa == wb:
            cand = np.int64(lab_d[i]) + np.int64(lab_d[j])
            if cand < best:
                best = cand
            i += 1
            j += 1
        elif wa < wb:
            i += 1
        else:
            j += 1
    return best


@njit(cache=True, parallel=True)
def query_batch(lab_indptr, lab_lm, lab_d, us, vs, out_dist, out_touched):
    for t in prange(us.size):
        u = us[t]
        v = vs[t]
        i = lab_indptr[u]
        iend = lab_indptr[u + 1]
        j = lab_indptr[v]
        jend = lab_indptr[v + 1]
        best = np.int64(INF64)
        touched = np.int64(0)
        while i < iend and j < jend:
            wa = lab_lm[i]
            wb = lab_lm[j]
            if wa == wb:
                cand = np.int64(lab_d[i]) + np.int64(lab_d[j])
                if cand < best:
                    best = cand
                i += 1
                j += 1
                touched += 2
            elif wa < wb:
                i += 1
                touched += 1
            else:
                j += 1
                touched += 1
        out_dist[t] = best
        out_touched[t] = touched


@njit(cache=True, inline="always")
def _pair_code(lab_indptr, lab_lm, lab_d, a, b, i, j):
    # PAD outranks VIRTUAL so padding can never draw attention.
    if a == TOK_PAD or b == TOK_PAD:
        return np.int64(BIAS_MASK)
    if a == TOK_VIRTUAL or b == TOK_VIRTUAL:
        return np.int64(BIAS_INF)
    if i == j:
        return np.int64(0)
    d = _pair_spd(lab_indptr, lab_lm, lab_d, a, b)
    if d >= INF64:
        return np.int64(-1)  # disconnected real pair: contract violation
    if d > BIAS_FINITE_MAX:
        d = np.int64(BIAS_FINITE_MAX)
    return d


@njit(cache=True, parallel=True)
def bias_fill_parallel(tokens, lab_indptr, lab_lm, lab_d, out):
    n = tokens.shape[0] - 1
    t = tokens.shape[1]
    bad = 0
    for node in prange(1, n + 1):
        for i in range(t):
            a = tokens[node, i]
            for j in range(i, t):
                code = _pair_code(lab_indptr, lab_lm, lab_d, a, tokens[node, j], i, j)
                if code < 0:
                    bad += 1
                    code = np.int64(BIAS_INF)
                out[node, i, j] = np.uint16(code)
                out[node, j, i] = np.uint16(code)
    return bad


@njit(cache=True)
def bias_fill_cached(tokens, lab_indptr, lab_lm, lab_d, out):
    n = tokens.shape[0] - 1
    t = tokens.shape[1]
    cache = Dict.empty(types.int64, types.int64)
    hits = 0
    misses = 0
    bad = 0
    for node in range(1, n + 1):
        for i in range(t):
            a = tokens[node, i]
            for j in range(i, t):
                b = tokens[node, j]
                real_pair = a >= 1 and b >= 1 and i != j
                if real_pair:
                    lo = a if a < b else b
                    hi = b if a < b else a
                    key = lo * np.int64(n + 1) + hi
                    if key in cache:
                        hits += 1
                        code = cache[key]
                    else:
                        misses += 1
                        code = _pair_code(lab_indptr, lab_lm, lab_d, a, b, i, j)
                        if code >= 0:
                            cache[key] = code
                else:
                    code = _pair_code(lab_indptr, lab_lm, lab_d, a, b, i, j)
                if code < 0:
                    bad += 1
                    code = np.int64(BIAS_INF)
                out[node, i, j] = np.uint16(code)
                out[node, j, i] = np.uint16(code)
    return hits, misses, bad
