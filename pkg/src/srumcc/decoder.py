"""Successive-cancellation sliding-window list decoding.

For each sub-frame the serial list decoder proposes candidates for ``v[t]``
from the residual ``z0``. Each one is scored by M2 on the next received block
flipped by ``phi(v R)``, and the first candidate reaching the threshold is
accepted. Otherwise the best-scoring candidate is taken. The
decision is then cancelled from ``y[t+1]`` to form the next ``z0``.

In the w=3 mode a failed threshold test keeps the ``keep_list`` best
candidates. Each is extended by one more w=2 step over ``(y[t+1], y[t+2])``,
and the candidate whose three-block path is most likely is kept.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .basic_code import (_branch_metrics, _forward, _slva_next, _slva_seed, _viterbi,
                         _viterbi_bm, viterbi_ops)
from .codec import RandomTransform, _gf2_vecmat, _unpack_signs
from .edf import ThresholdTable
from .trellis import CodeSpec, Trellis


_LN2 = math.log(2.0)


@njit(cache=True)
def _abs_terms(z, sigma2):
    """``(sum softplus(-2|z|/sigma2), sum |z|)``, the flip-invariant parts of the EDF."""
    c = 0.0
    a = 0.0
    for i in range(z.shape[0]):
        m = abs(z[i])
        c += math.log1p(math.exp(-2.0 * m / sigma2))
        a += m
    return c, a


@njit(cache=True)
def _edf_from_corr(c, a, corr, sigma2, n):
    # softplus(-2 z x / s2) = softplus(-2|z| / s2) + (|z| - z x) / s2 for x = +-1
    return 1.0 - (c + (a - corr) / sigma2) / (_LN2 * n)


@njit(cache=True)
def _list_step(z0, y1, last, thr, ell_max, sigma2, packed,
               src, dst, num_edges, signs, out_off, out_len, starts, S, tail_biting,
               in_edges, in_count, hkey, hval, node_t, node_s, node_a, node_g,
               node_parent, node_edge, paths, bits, m2s, corr0s, corr1s, z1, state):
    """One window-2 decision; returns ``(status, ell, best, passed)``.

    Candidate ``l`` leaves its path, code bits, M2 and both correlation
    metrics in row ``l`` of the output arrays. ``status`` is -1 when the
    list storage is too small. ``state[3]`` counts Viterbi passes of the
    serial list (0 or 1), ``state[2]`` its heap pops.

    The first candidate is the Viterbi output; the serial list search is
    only set up when a second one is requested.
    """
    T = src.shape[0]
    n = z0.shape[0]
    bm = _branch_metrics(signs, out_off, out_len, z0)
    c0, a0 = _abs_terms(z0, sigma2)
    c1, a1 = _abs_terms(y1, sigma2)
    state[2] = 0
    state[3] = 0
    alpha = np.empty((0, 0, 0))
    best = -1
    best_m = -np.inf
    ell = 0
    passed = False
    for l in range(ell_max):
        if l == 0:
            corr0, p0 = _viterbi_bm(src, dst, num_edges, bm, starts[0], S, tail_biting)
            paths[0, :] = p0
        else:
            if l == 1:
                alpha, _ = _forward(src, dst, num_edges, bm, starts, S)
                state[3] = 1
                size, count = _slva_seed(alpha, starts, S, tail_biting, hkey, hval, node_t,
                                         node_s, node_a, node_g, node_parent, node_edge)
                state[0] = size
                state[1] = count
                # the list head is the Viterbi path already scored
                r = _slva_next(alpha, bm, src, in_edges, in_count, hkey, hval, state, node_t,
                               node_s, node_a, node_g, node_parent, node_edge, paths[1])
                if r == -1:
                    return -1, ell, best, passed
            r = _slva_next(alpha, bm, src, in_edges, in_count, hkey, hval, state, node_t,
                           node_s, node_a, node_g, node_parent, node_edge, paths[l])
            if r == -1:
                return -1, ell, best, passed
            if r == 0:
                break
            corr0 = 0.0
            for t in range(T):
                corr0 += bm[t, paths[l, t]]
        ell += 1
        for t in range(T):
            e = paths[l, t]
            o = out_off[t]
            for j in range(out_len[t]):
                bits[l, o + j] = 1 if signs[t, e, j] < 0 else 0
        _unpack_signs(_gf2_vecmat(bits[l], packed), n, z1)
        for i in range(n):
            z1[i] *= y1[i]
        if last:
            corr1 = z1.sum()
        else:
            corr1, _ = _viterbi(src, dst, num_edges, signs, out_off, out_len, z1, starts, S,
                                tail_biting)
        m2 = (_edf_from_corr(c0, a0, corr0, sigma2, n)
              + _edf_from_corr(c1, a1, corr1, sigma2, n))
        m2s[l] = m2
        corr0s[l] = corr0
        corr1s[l] = corr1
        # strict ">" keeps the earlier candidate on ties
        if m2 > best_m:
            best_m = m2
            best = l
        if m2 >= thr:
            passed = True
            break
    return 1, ell, best, passed


class _Workspace:
    """Preallocated storage for :func:`_list_step`."""

    def __init__(self, tr: Trellis, ell_max: int, cap: int | None = None):
        edges, counts = tr.in_edges
        T = tr.num_sections
        if cap is None:
            cap = len(tr.start_states) * tr.num_states + (ell_max + 1) * (T + 1) * edges.shape[2] + 64
        self.cap = cap
        self.heap = (np.empty(cap), np.empty(cap, dtype=np.int64))
        self.nodes = tuple(np.empty(cap, dtype=np.int64) for _ in range(3)) + (
            np.empty(cap),) + tuple(np.empty(cap, dtype=np.int64) for _ in range(2))
        self.paths = np.empty((ell_max, T), dtype=np.int64)
        self.bits = np.zeros((ell_max, tr.n), dtype=np.uint8)
        self.m2 = np.empty(ell_max)
        self.corr0 = np.empty(ell_max)
        self.corr1 = np.empty(ell_max)
        self.z1 = np.empty(tr.n)
        self.state = np.zeros(4, dtype=np.int64)


@dataclass(frozen=True)
class DecodeConfig:
    thresholds: ThresholdTable
    ell_max: int = 64
    window: int = 2
    keep_list: int = 4

    def __post_init__(self):
        if self.ell_max < 1:
            raise ValueError("ell_max must be >= 1")
        if self.window not in (2, 3):
            raise ValueError(f"window must be 2 or 3, got {self.window}")
        if not 1 <= self.keep_list <= self.ell_max:
            raise ValueError("keep_list must lie in [1, ell_max]")


@dataclass
class DecodeTrace:
    ell: np.ndarray
    m_max: np.ndarray
    passed: np.ndarray
    extended: np.ndarray
    acs: int = 0

    @property
    def avg_list_size(self) -> float:
        return float(self.ell.mean()) if self.ell.size else 0.0


@dataclass
class _Step:
    path: np.ndarray
    bits: np.ndarray
    m2: float
    corr0: float
    corr_inner: float
    ell: int
    passed: bool
    candidates: list = field(default_factory=list)


class SCDecoder:
    """Successive-cancellation list decoder bound to one code, transform and SNR."""

    def __init__(self, basic: CodeSpec, R: RandomTransform, cfg: DecodeConfig, snr_db: float,
                 sigma2: float | None = None):
        self.basic = basic
        self.trellis = basic.trellis
        self.R = R
        self.cfg = cfg
        self.snr_db = float(snr_db)
        self.sigma2 = float(sigma2) if sigma2 is not None else 10.0 ** (-snr_db / 10.0)
        self.T = cfg.thresholds.lookup(self.snr_db)
        if math.isfinite(self.T) and not cfg.thresholds.covers(self.snr_db):
            warnings.warn(f"threshold interpolated at uncalibrated SNR {self.snr_db} dB",
                          stacklevel=2)
        tr = self.trellis
        if R.n != tr.n:
            raise ValueError(f"transform order {R.n} does not match n={tr.n}")
        self._targs = (tr.src, tr.dst, tr.num_edges, tr.signs, tr.out_off, tr.out_len,
                       tr.start_states, tr.num_states, tr.tail_biting, *tr.in_edges)
        self._ws = _Workspace(tr, cfg.ell_max)
        self._va_ops = viterbi_ops(self.trellis)
        self._bits_per_section = self.trellis.n / self.trellis.num_sections
        self.acs = 0

    # one window-2 step -----------------------------------------------------

    def _step(self, z0, y_next, last: bool, collect: bool = False) -> _Step:
        tr, ws, cfg = self.trellis, self._ws, self.cfg
        while True:
            status, ell, best, passed = _list_step(
                z0, y_next, last, self.T, cfg.ell_max, self.sigma2, self.R.packed,
                *self._targs, *ws.heap, *ws.nodes, ws.paths, ws.bits, ws.m2, ws.corr0,
                ws.corr1, ws.z1, ws.state)
            if status == 1:
                break
            ws = self._ws = _Workspace(tr, cfg.ell_max, 2 * ws.cap)
        # nominal Viterbi cost per pass plus measured heap pops of the list search
        passes = 1 + (0 if last else ell) + int(ws.state[3])
        self.acs += self._va_ops * passes + int(ws.state[2] * self._bits_per_section)
        cands = []
        if collect:
            cands = [(ws.m2[l], l + 1, ws.paths[l].copy(), ws.bits[l].copy(), ws.corr0[l])
                     for l in range(ell)]
        return _Step(ws.paths[best].copy(), ws.bits[best].copy(), float(ws.m2[best]),
                     float(ws.corr0[best]), float(ws.corr1[best]), ell, bool(passed), cands)

    # frame decoding ----------------------------------------------------------

    def decode(self, y_blocks, stop_after: int | None = None):
        """Decode ``L + 1`` received blocks; returns ``(u_hat, trace)``.

        ``stop_after`` limits decoding to the first sub-frames (the rest of
        ``u_hat`` is left zero and excluded from the trace).
        """
        y_blocks = np.ascontiguousarray(y_blocks, dtype=np.float64)
        L = y_blocks.shape[0] - 1
        if L < 1 or y_blocks.shape[1] != self.basic.n:
            raise ValueError(f"expected (L+1, {self.basic.n}) received blocks, got {y_blocks.shape}")
        steps = L if stop_after is None else min(L, stop_after)
        tr = self.trellis
        u_hat = np.zeros((L, self.basic.k), dtype=np.uint8)
        ell = np.zeros(steps, dtype=np.int64)
        m_max = np.zeros(steps)
        passed = np.zeros(steps, dtype=bool)
        extended = np.zeros(steps, dtype=bool)
        self.acs = 0
        z0 = y_blocks[0].copy()
        for t in range(steps):
            last = t == L - 1
            use_w3 = self.cfg.window == 3 and not last
            st = self._step(z0, y_blocks[t + 1], last, collect=use_w3)
            ell[t], m_max[t], passed[t] = st.ell, st.m2, st.passed
            bits, path = st.bits, st.path
            if use_w3 and not st.passed:
                extended[t] = True
                bits, path = self._extend(st, y_blocks[t + 1], y_blocks[t + 2], t + 1 == L - 1)
            u_hat[t] = tr.path_info(path)
            z0 = y_blocks[t + 1] * self.R.apply_signs(bits)
        trace = DecodeTrace(ell, m_max, passed, extended, self.acs)
        return u_hat, trace

    def _extend(self, st: _Step, y1, y2, next_is_last: bool):
        """Pick among the kept candidates by three-block likelihood."""
        kept = sorted(st.candidates, key=lambda c: (-c[0], c[1]))[: self.cfg.keep_list]
        best_val, choice = -math.inf, None
        for m2, ell, path, bits, corr0 in kept:
            z1 = y1 * self.R.apply_signs(bits)
            inner = self._step(z1, y2, next_is_last)
            val = corr0 + inner.corr0 + inner.corr_inner
            if val > best_val:
                best_val, choice = val, (bits, path)
        return choice


def decode_frame(y_blocks, basic: CodeSpec, R: RandomTransform, cfg: DecodeConfig, snr_db: float,
                 sigma2: float | None = None, stop_after: int | None = None):
    """Window-2 decoding (or window 3 when ``cfg.window == 3``)."""
    return SCDecoder(basic, R, cfg, snr_db, sigma2).decode(y_blocks, stop_after)


def decode_frame_w3(y_blocks, basic: CodeSpec, R: RandomTransform, cfg: DecodeConfig,
                    snr_db: float, sigma2: float | None = None, stop_after: int | None = None):
    if cfg.window != 3:
        raise ValueError("decode_frame_w3 needs cfg.window == 3")
    return SCDecoder(basic, R, cfg, snr_db, sigma2).decode(y_blocks, stop_after)


def genie_lower_bound(basic: CodeSpec, ell_max: int, sigma: float, trials: int, seed: int = 0) -> float:
    """fER_0 can be no lower than the probability the list misses the transmitted word."""
    from .basic_code import list_failure_probability

    return list_failure_probability(basic, ell_max, sigma, trials, seed)
