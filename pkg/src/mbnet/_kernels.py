"""Low-level numba kernels for layer training, encoding, and match-count Grams.

Every random draw in this module comes from a splitmix64 counter stream
keyed by explicit 64-bit integers, so results are bit-identical for a
fixed key regardless of call order or thread count.  Modulo reduction of
the 64-bit stream introduces a selection bias below 2^-48 for the pool
sizes used here, which is ignored.

Array dtype contract (callers must comply, kernels are compiled for it):
  assignment matrices     int16   (entries < 32768 centroids)
  grouped point order     int32
  group start offsets     int32
  centroid row indices    int32
  feature-subset indices  int16
  salts / row hashes      uint64
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

U64 = np.uint64

_GAMMA = 0x9E3779B97F4A7C15
_SEED0 = 0x8A5CD789635D2DFF
_MASK = (1 << 64) - 1

_GAMMA_U = U64(_GAMMA)
_SEED0_U = U64(_SEED0)


def splitmix64(x: int) -> int:
    """Pure-python splitmix64 finalizer; twin of the jitted _sm64."""
    z = (x + _GAMMA) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def mix(*parts: int) -> int:
    """Fold integers into one 64-bit stream key.

    Python twin of the in-kernel key chain: kernels extend a key with
    _mix1, so mix(a, b, c) equals _mix1(_mix1(mix(a), b), c).
    """
    h = _SEED0
    for p in parts:
        h = splitmix64(h ^ splitmix64(p & _MASK))
    return h


def stream_value(key: int, t: int) -> int:
    """Pure-python twin of the jitted _stream counter."""
    return splitmix64((key + (t + 1) * _GAMMA) & _MASK)


def stream_uniform(key: int, t: int) -> float:
    """Uniform float64 in [0, 1) drawn from the counter stream at key."""
    return (stream_value(key, t) >> 11) * 2.0**-53


@njit(nogil=True, cache=True)
def _sm64(x):
    z = x + _GAMMA_U
    z = (z ^ (z >> U64(30))) * U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> U64(27))) * U64(0x94D049BB133111EB)
    return z ^ (z >> U64(31))


@njit(nogil=True, cache=True)
def _mix1(h, p):
    return _sm64(h ^ _sm64(p))


@njit(nogil=True, cache=True)
def _stream(key, t):
    # t-th value of the counter stream rooted at key
    return _sm64(key + U64(t + 1) * _GAMMA_U)


@njit(nogil=True, cache=True)
def _sample_distinct(key, pool, count, out, scratch):
    # partial Fisher-Yates over [0, pool); scratch holds >= pool slots
    for i in range(pool):
        scratch[i] = i
    for t in range(count):
        r = t + int(_stream(key, t) % U64(pool - t))
        tmp = scratch[t]
        scratch[t] = scratch[r]
        scratch[r] = tmp
        out[t] = scratch[t]


@njit(nogil=True, cache=True)
def draw_layer_params(layer_key, n_units, n_feat, f, n_rows, k):
    """Per-unit feature subsets, centroid rows, and tie salts.

    Unit u's draws depend only on (layer_key, u): subsets from stream
    tag 0, centroid rows from tag 1, tie salt from tag 2.
    """
    subsets = np.empty((n_units, f), np.int16)
    centroids = np.empty((n_units, k), np.int32)
    salts = np.empty(n_units, np.uint64)
    scratch = np.empty(max(n_feat, n_rows), np.int32)
    sub_row = np.empty(f, np.int32)
    for u in range(n_units):
        ukey = _mix1(layer_key, U64(u))
        _sample_distinct(_mix1(ukey, U64(0)), n_feat, f, sub_row, scratch)
        for t in range(f):
            subsets[u, t] = sub_row[t]
        _sample_distinct(_mix1(ukey, U64(1)), n_rows, k, centroids[u], scratch)
        salts[u] = _mix1(ukey, U64(2))
    return subsets, centroids, salts


@njit(nogil=True, cache=True)
def group_columns(codeT, k_prev):
    """Counting-sort every code column by assigned centroid.

    codeT is (V, n) int16.  Returns (order, starts) with order[v, starts[v, w]
    : starts[v, w+1]] listing the points unit v assigned to centroid w.
    """
    V, n = codeT.shape
    order = np.empty((V, n), np.int32)
    starts = np.zeros((V, k_prev + 1), np.int32)
    cursor = np.empty(k_prev + 1, np.int32)
    for v in range(V):
        st = starts[v]
        for i in range(n):
            st[codeT[v, i] + 1] += 1
        for w in range(k_prev):
            st[w + 1] += st[w]
        for w in range(k_prev + 1):
            cursor[w] = st[w]
        ov = order[v]
        for i in range(n):
            w = codeT[v, i]
            ov[cursor[w]] = i
            cursor[w] += 1
    return order, starts


@njit(nogil=True, cache=True)
def hash_rows(colsT):
    """Fold each data row's values into a 64-bit content hash.

    colsT is feature-major (d, n); works for int16 codes and for float64
    bit patterns viewed as uint64.  Equal rows get equal hashes, which
    makes tie-breaking reproduce on re-encoded duplicates.
    """
    d, n = colsT.shape
    h = np.full(n, _SEED0_U, np.uint64)
    for v in range(d):
        for i in range(n):
            h[i] = _mix1(h[i], U64(colsT[v, i]))
    return h


@njit(nogil=True, cache=True, parallel=True)
def match_assign(order, starts, centT, subsets, cent_rows, salts, rowhash, k):
    """Assign every point to its max-match-count centroid, per unit.

    order/starts group the points being encoded; centT is the training
    code the centroid rows index into (identical to the grouped code
    during training).  Ties are broken uniformly via reservoir draws
    keyed by (unit salt, row content hash), so a re-encoded duplicate of
    a training row reproduces the training assignment.
    """
    n_units, f = subsets.shape
    n_new = order.shape[1]
    outT = np.empty((n_units, n_new), np.int16)
    for u in prange(n_units):
        counts = np.zeros((k, n_new), np.int16)
        for vi in range(f):
            v = subsets[u, vi]
            ov = order[v]
            for j in range(k):
                w = centT[v, cent_rows[u, j]]
                s1 = starts[v, w + 1]
                crow = counts[j]
                for t in range(starts[v, w], s1):
                    crow[ov[t]] += 1
        bestv = np.empty(n_new, np.int16)
        cnt = np.empty(n_new, np.int32)
        pick = np.empty(n_new, np.int16)
        row0 = counts[0]
        for i in range(n_new):
            bestv[i] = row0[i]
            cnt[i] = 1
            pick[i] = 0
        salt = salts[u]
        for j in range(1, k):
            row = counts[j]
            for i in range(n_new):
                m = row[i]
                if m > bestv[i]:
                    bestv[i] = m
                    cnt[i] = 1
                    pick[i] = j
                elif m == bestv[i]:
                    c = cnt[i] + 1
                    cnt[i] = c
                    if _stream(_mix1(salt, rowhash[i]), c) % U64(c) == U64(0):
                        pick[i] = j
        urow = outT[u]
        for i in range(n_new):
            urow[i] = pick[i]
    return outT


@njit(nogil=True, cache=True)
def argmin_reservoir(dist, salt, rowhash, out_col):
    """Row-wise argmin of a dense distance matrix with seeded tie draws.

    Ties are exact float equality; same reservoir rule as match_assign
    (first index, then each later tied index accepted with prob 1/count).
    """
    n, k = dist.shape
    for i in range(n):
        best = dist[i, 0]
        pick = 0
        cnt = 1
        for j in range(1, k):
            d = dist[i, j]
            if d < best:
                best = d
                pick = j
                cnt = 1
            elif d == best:
                cnt += 1
                if _stream(_mix1(salt, rowhash[i]), cnt) % U64(cnt) == U64(0):
                    pick = j
        out_col[i] = pick


@njit(nogil=True, cache=True)
def accumulate_match_gram(order, starts, gram):
    """Add one code block's match counts to the n-by-n Gram matrix."""
    V = order.shape[0]
    k = starts.shape[1] - 1
    for v in range(V):
        ov = order[v]
        for w in range(k):
            s0 = starts[v, w]
            s1 = starts[v, w + 1]
            for a in range(s0, s1):
                grow = gram[ov[a]]
                for b in range(s0, s1):
                    grow[ov[b]] += 1
