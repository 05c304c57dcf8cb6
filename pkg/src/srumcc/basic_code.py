"""Viterbi and serial list Viterbi decoding of the basic code.

Path metric is the correlation ``sum(y * phi(v))``, which orders codewords
exactly as the AWGN likelihood does. Tail-biting trellises are decoded
exactly: every start state is its own subcode and the best path over all
subcodes wins.

The serial list decoder is a tree-trellis search. A forward pass stores the
best prefix metric ``alpha[s0, t, s]`` for every node; a best-first search
then grows path suffixes backwards from the end, ranked by
``alpha + suffix``. Since ``alpha`` is the exact best completion, complete
paths leave the priority queue in non-increasing metric order, and only
prefixes of emitted paths are ever expanded. For tail-biting codes all
subcodes share a single queue, which merges their lists globally.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .trellis import Trellis

NEG_INF = -np.inf


@njit(cache=True)
def _branch_metrics(signs, out_off, out_len, y):
    T, E, W = signs.shape
    bm = np.zeros((T, E))
    for t in range(T):
        o = out_off[t]
        if W == 2 and out_len[t] == 2:
            a, b = y[o], y[o + 1]
            for e in range(E):
                bm[t, e] = a * signs[t, e, 0] + b * signs[t, e, 1]
            continue
        for e in range(E):
            acc = 0.0
            for j in range(out_len[t]):
                acc += y[o + j] * signs[t, e, j]
            bm[t, e] = acc
    return bm


@njit(cache=True)
def _forward_into(src, dst, num_edges, bm, s0, S, alpha, surv):
    """Single-start forward pass into preallocated ``alpha (T+1, S)``, ``surv (T, S)``."""
    T = src.shape[0]
    for s in range(S):
        alpha[0, s] = -np.inf
    alpha[0, s0] = 0.0
    for t in range(T):
        for s in range(S):
            alpha[t + 1, s] = -np.inf
        for e in range(num_edges[t]):
            # -inf predecessors never win the compare
            c = alpha[t, src[t, e]] + bm[t, e]
            d = dst[t, e]
            if c > alpha[t + 1, d]:
                alpha[t + 1, d] = c
                surv[t, d] = e


@njit(cache=True)
def _forward(src, dst, num_edges, bm, starts, S):
    S0 = starts.shape[0]
    T = src.shape[0]
    alpha = np.empty((S0, T + 1, S))
    surv = np.full((S0, T, S), -1, dtype=np.int64)
    for a in range(S0):
        _forward_into(src, dst, num_edges, bm, starts[a], S, alpha[a], surv[a])
    return alpha, surv


@njit(cache=True)
def _free_bounds(src, dst, num_edges, bm, S):
    """Per-state upper bounds on any tail-biting path through that state.

    Forward metrics with a free start bound paths ending in ``s``; backward
    metrics with a free end bound paths starting in ``s``.
    """
    T = src.shape[0]
    fwd = np.empty((T + 1, S))
    bwd = np.empty((T + 1, S))
    for s in range(S):
        fwd[0, s] = 0.0
        bwd[T, s] = 0.0
    for t in range(T):
        for s in range(S):
            fwd[t + 1, s] = -np.inf
        for e in range(num_edges[t]):
            c = fwd[t, src[t, e]] + bm[t, e]
            d = dst[t, e]
            if c > fwd[t + 1, d]:
                fwd[t + 1, d] = c
    for t in range(T - 1, -1, -1):
        for s in range(S):
            bwd[t, s] = -np.inf
        for e in range(num_edges[t]):
            c = bwd[t + 1, dst[t, e]] + bm[t, e]
            a = src[t, e]
            if c > bwd[t, a]:
                bwd[t, a] = c
    ub = np.empty(S)
    for s in range(S):
        ub[s] = min(fwd[T, s], bwd[0, s])
    return ub


@njit(cache=True)
def _viterbi_tb(src, dst, num_edges, bm, S):
    """Exact tail-biting ML by branch and bound over the subcodes.

    Subcodes are decoded in order of their upper bound and the search stops
    once no remaining bound can beat the best tail-biting path found.
    """
    T = src.shape[0]
    ub = _free_bounds(src, dst, num_edges, bm, S)
    order = np.argsort(-ub, kind="mergesort")
    best = -np.inf
    best_path = np.empty(T, dtype=np.int64)
    alpha = np.empty((T + 1, S))
    surv = np.empty((T, S), dtype=np.int64)
    for i in range(S):
        s0 = order[i]
        if ub[s0] <= best:
            break
        _forward_into(src, dst, num_edges, bm, s0, S, alpha, surv)
        m = alpha[T, s0]
        if m > best:
            best = m
            s = s0
            for t in range(T - 1, -1, -1):
                e = surv[t, s]
                best_path[t] = e
                s = src[t, e]
    return best, best_path


@njit(cache=True)
def _viterbi_bm(src, dst, num_edges, bm, start, S, tail_biting):
    """ML path from precomputed branch metrics; returns ``(metric, path)``."""
    if tail_biting:
        return _viterbi_tb(src, dst, num_edges, bm, S)
    T = src.shape[0]
    alpha = np.empty((T + 1, S))
    surv = np.empty((T, S), dtype=np.int64)
    _forward_into(src, dst, num_edges, bm, start, S, alpha, surv)
    best = -np.inf
    bs = 0
    for s in range(S):
        if alpha[T, s] > best:
            best, bs = alpha[T, s], s
    path = np.empty(T, dtype=np.int64)
    s = bs
    for t in range(T - 1, -1, -1):
        e = surv[t, s]
        path[t] = e
        s = src[t, e]
    return best, path


@njit(cache=True)
def _viterbi(src, dst, num_edges, signs, out_off, out_len, y, starts, S, tail_biting):
    bm = _branch_metrics(signs, out_off, out_len, y)
    return _viterbi_bm(src, dst, num_edges, bm, starts[0], S, tail_biting)


@njit(cache=True)
def _heap_push(hkey, hval, size, key, val):
    i = size
    hkey[i] = key
    hval[i] = val
    while i > 0:
        p = (i - 1) >> 1
        # larger key first; equal keys resolved by insertion order (smaller id)
        if hkey[p] > hkey[i] or (hkey[p] == hkey[i] and hval[p] < hval[i]):
            break
        hkey[p], hkey[i] = hkey[i], hkey[p]
        hval[p], hval[i] = hval[i], hval[p]
        i = p
    return size + 1


@njit(cache=True)
def _heap_pop(hkey, hval, size):
    key, val = hkey[0], hval[0]
    size -= 1
    hkey[0], hval[0] = hkey[size], hval[size]
    i = 0
    while True:
        l = 2 * i + 1
        if l >= size:
            break
        c = l
        r = l + 1
        if r < size and (hkey[r] > hkey[l] or (hkey[r] == hkey[l] and hval[r] < hval[l])):
            c = r
        if hkey[i] > hkey[c] or (hkey[i] == hkey[c] and hval[i] < hval[c]):
            break
        hkey[c], hkey[i] = hkey[i], hkey[c]
        hval[c], hval[i] = hval[i], hval[c]
        i = c
    return size, key, val


@njit(cache=True)
def _slva_seed(alpha, starts, S, tail_biting, hkey, hval, node_t, node_s, node_a,
               node_g, node_parent, node_edge):
    T = alpha.shape[1] - 1
    size = 0
    count = 0
    for a in range(starts.shape[0]):
        for s in range(S):
            if tail_biting and s != starts[a]:
                continue
            f = alpha[a, T, s]
            if f == -np.inf:
                continue
            node_t[count] = T
            node_s[count] = s
            node_a[count] = a
            node_g[count] = 0.0
            node_parent[count] = -1
            node_edge[count] = -1
            size = _heap_push(hkey, hval, size, f, count)
            count += 1
    return size, count


@njit(cache=True)
def _slva_next(alpha, bm, src, in_edges, in_count, hkey, hval, state,
               node_t, node_s, node_a, node_g, node_parent, node_edge, path):
    """Advance to the next complete path.

    ``state = [heap_size, node_count, pops]``. Returns 1 with ``path`` filled,
    0 when the codebook is exhausted, -1 when node storage must grow.
    """
    size = state[0]
    count = state[1]
    cap = node_t.shape[0]
    width = in_edges.shape[2]
    while size > 0:
        if count + width > cap:
            state[0] = size
            state[1] = count
            return -1
        size, f, nid = _heap_pop(hkey, hval, size)
        state[2] += 1
        t = node_t[nid]
        if t == 0:
            p = nid
            while node_parent[p] >= 0:
                path[node_t[p]] = node_edge[p]
                p = node_parent[p]
            state[0] = size
            state[1] = count
            return 1
        s = node_s[nid]
        a = node_a[nid]
        g = node_g[nid]
        for j in range(in_count[t - 1, s]):
            e = in_edges[t - 1, s, j]
            ps = src[t - 1, e]
            pa = alpha[a, t - 1, ps]
            if pa == -np.inf:
                continue
            ng = g + bm[t - 1, e]
            node_t[count] = t - 1
            node_s[count] = ps
            node_a[count] = a
            node_g[count] = ng
            node_parent[count] = nid
            node_edge[count] = e
            size = _heap_push(hkey, hval, size, pa + ng, count)
            count += 1
    state[0] = size
    state[1] = count
    return 0


class ListExhausted(Exception):
    """Raised when every codeword has already been emitted."""


class SerialListViterbi:
    """Iterator over codewords in non-increasing likelihood order.

    Each item is ``(info_bits, code_bits, metric)`` with ``metric`` the
    correlation ``sum(y * phi(v))``. ``ops`` counts queue pops, a proxy for
    the per-candidate search cost.
    """

    def __init__(self, trellis: Trellis, y, capacity: int = 4096):
        y = np.ascontiguousarray(y, dtype=np.float64)
        if y.shape != (trellis.n,):
            raise ValueError(f"received length {y.shape} does not match n={trellis.n}")
        self.trellis = trellis
        tr = trellis
        self._bm = _branch_metrics(tr.signs, tr.out_off, tr.out_len, y)
        self._alpha, _ = _forward(tr.src, tr.dst, tr.num_edges, self._bm,
                                  tr.start_states, tr.num_states)
        self._in_edges, self._in_count = tr.in_edges
        cap = max(capacity, len(tr.start_states) * tr.num_states + 64)
        self._alloc(cap)
        size, count = _slva_seed(self._alpha, tr.start_states, tr.num_states, tr.tail_biting,
                                 self._hkey, self._hval, *self._nodes)
        self._state = np.array([size, count, 0], dtype=np.int64)
        self._path = np.empty(tr.num_sections, dtype=np.int64)
        self.emitted = 0
        self.exhausted = False

    def _alloc(self, cap, keep: int = 0):
        old = getattr(self, "_nodes", None)
        nodes = (
            np.empty(cap, dtype=np.int64),
            np.empty(cap, dtype=np.int64),
            np.empty(cap, dtype=np.int64),
            np.empty(cap, dtype=np.float64),
            np.empty(cap, dtype=np.int64),
            np.empty(cap, dtype=np.int64),
        )
        hkey, hval = np.empty(cap), np.empty(cap, dtype=np.int64)
        if old is not None:
            for new, o in zip(nodes, old):
                new[:keep] = o[:keep]
            h = int(self._state[0])
            hkey[:h] = self._hkey[:h]
            hval[:h] = self._hval[:h]
        self._nodes = nodes
        self._hkey, self._hval = hkey, hval

    @property
    def ops(self) -> int:
        return int(self._state[2])

    def next_path(self):
        """Next edge path and its metric, or ``None`` when exhausted."""
        if self.exhausted:
            return None
        tr = self.trellis
        while True:
            r = _slva_next(self._alpha, self._bm, tr.src, self._in_edges, self._in_count,
                           self._hkey, self._hval, self._state, *self._nodes, self._path)
            if r == -1:
                self._alloc(2 * self._nodes[0].shape[0], keep=int(self._state[1]))
                continue
            break
        if r == 0:
            self.exhausted = True
            return None
        self.emitted += 1
        path = self._path.copy()
        metric = float(self._bm[np.arange(tr.num_sections), path].sum())
        return path, metric

    def __iter__(self):
        return self

    def __next__(self):
        item = self.next_path()
        if item is None:
            raise StopIteration
        path, metric = item
        return self.trellis.path_info(path), self.trellis.path_codeword(path), metric


def slva_init(trellis: Trellis, y) -> SerialListViterbi:
    return SerialListViterbi(trellis, y)


def slva_next(it: SerialListViterbi):
    """``(info_bits, code_bits, metric)`` of the next best codeword."""
    item = it.next_path()
    if item is None:
        raise ListExhausted(f"all {it.emitted} codewords emitted")
    path, metric = item
    return it.trellis.path_info(path), it.trellis.path_codeword(path), metric


def viterbi_path(trellis: Trellis, y):
    y = np.ascontiguousarray(y, dtype=np.float64)
    if y.shape != (trellis.n,):
        raise ValueError(f"received length {y.shape} does not match n={trellis.n}")
    tr = trellis
    return _viterbi(tr.src, tr.dst, tr.num_edges, tr.signs, tr.out_off, tr.out_len, y,
                    tr.start_states, tr.num_states, tr.tail_biting)


def viterbi(trellis: Trellis, y):
    """ML codeword: returns ``(info_bits, code_bits, metric)``."""
    metric, path = viterbi_path(trellis, y)
    return trellis.path_info(path), trellis.path_codeword(path), float(metric)


def viterbi_ops(trellis: Trellis) -> int:
    """Add-compare-select count of one (exact) Viterbi pass."""
    per_subcode = int(np.sum(trellis.num_edges * trellis.out_len) // 2)
    return per_subcode * len(trellis.start_states)


def transmitted_rank(trellis: Trellis, y, u, limit: int) -> int:
    """Position of information word ``u`` in the serial list, or ``limit + 1``."""
    it = SerialListViterbi(trellis, y)
    u = np.asarray(u, dtype=np.uint8)
    for ell in range(1, limit + 1):
        item = it.next_path()
        if item is None:
            break
        if np.array_equal(trellis.path_info(item[0]), u):
            return ell
    return limit + 1


def list_failure_probability(code, ell_max: int, sigma: float, trials: int, seed: int = 0,
                             ranks: np.ndarray | None = None) -> float:
    """Monte Carlo estimate of P(transmitted codeword not in the first ``ell_max``)."""
    from .channel import bpsk_map, frame_stream

    tr = code.trellis
    if ell_max >= 2 ** min(tr.k, 62):
        return 0.0
    miss = 0
    for i in range(trials):
        rng = frame_stream(seed, 0, i)
        u = rng.integers(0, 2, tr.k, dtype=np.uint8)
        y = bpsk_map(code.encode(u)) + sigma * rng.standard_normal(tr.n)
        r = transmitted_rank(tr, y, u, ell_max)
        if ranks is not None:
            ranks[i] = r
        miss += r > ell_max
    return miss / trials
