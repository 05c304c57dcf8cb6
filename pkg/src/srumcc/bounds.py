"""Weight enumerators, ensemble union bound and exhaustive reference decoders."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, log_ndtr, logsumexp

from .channel import bpsk_map
from .codec import RandomTransform
from .trellis import CodeSpec, Trellis


@dataclass(frozen=True)
class WeightEnumerator:
    """Exact codeword counts ``counts[w]`` for ``w = 0..n`` (Python ints)."""

    counts: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.counts) - 1

    def total(self) -> int:
        return sum(self.counts)

    def nonzero(self) -> "WeightEnumerator":
        """The enumerator of the nonzero codewords (one zero word removed)."""
        if self.counts[0] < 1:
            raise ValueError("enumerator has no zero codeword to remove")
        return WeightEnumerator((self.counts[0] - 1,) + self.counts[1:])

    def as_dict(self) -> dict[int, int]:
        return {w: a for w, a in enumerate(self.counts) if a}


@dataclass(frozen=True)
class EnsembleWEF:
    """Natural-log coefficients ``log_B[w]`` for ``w = 0..2n``; ``-inf`` marks zero."""

    log_B: np.ndarray
    n: int
    k: int

    def total(self) -> float:
        return float(np.exp(logsumexp(self.log_B)))


def _poly_add_shift(acc, poly, shift):
    if shift:
        acc[shift:] += poly[:-shift]
    else:
        acc += poly


def _trellis_wef(tr: Trellis, start: int, reverse: bool) -> list[int]:
    """Weight counts of paths that start (and, if tail-biting, end) at ``start``."""
    T, S, n = tr.num_sections, tr.num_states, tr.n
    weights = tr.out.sum(axis=2)
    zero = lambda: np.zeros(n + 1, dtype=object)
    polys = [zero() for _ in range(S)]
    sections = range(T - 1, -1, -1) if reverse else range(T)
    if reverse:
        # start from the admissible end states and walk edges backwards
        ends = [start] if tr.tail_biting else range(S)
        for s in ends:
            polys[s][0] = 1
    else:
        polys[start][0] = 1
    for t in sections:
        nxt = [zero() for _ in range(S)]
        for e in range(tr.num_edges[t]):
            a, b = int(tr.src[t, e]), int(tr.dst[t, e])
            if reverse:
                a, b = b, a
            if any(polys[a]):
                _poly_add_shift(nxt[b], polys[a], int(weights[t, e]))
        polys = nxt
    if reverse:
        return list(polys[start])
    if tr.tail_biting:
        return list(polys[start])
    total = zero()
    for p in polys:
        total += p
    return list(total)


def wef(basic: CodeSpec, reverse: bool = False) -> WeightEnumerator:
    """Exact weight enumerator by dynamic programming over the trellis."""
    tr = basic.trellis
    counts = np.zeros(tr.n + 1, dtype=object)
    for s in tr.start_states:
        counts += np.array(_trellis_wef(tr, int(s), reverse), dtype=object)
    return WeightEnumerator(tuple(int(c) for c in counts))


def brute_force_wef(basic: CodeSpec) -> WeightEnumerator:
    if basic.k > 16:
        raise ValueError("brute-force enumeration limited to k <= 16")
    counts = [0] * (basic.n + 1)
    for u in itertools.product((0, 1), repeat=basic.k):
        counts[int(basic.encode(np.array(u, dtype=np.uint8)).sum())] += 1
    return WeightEnumerator(tuple(counts))


def ensemble_wef(A: WeightEnumerator, n: int, k: int) -> EnsembleWEF:
    """Coefficients of ``2^(k-n) (1+X)^n A(X)`` for nonzero-word enumerator ``A``."""
    if A.n != n:
        raise ValueError(f"enumerator length {A.n} does not match n={n}")
    if A.counts[0] != 0:
        raise ValueError("pass the enumerator of nonzero codewords (see WeightEnumerator.nonzero)")
    ds = np.array([d for d, a in enumerate(A.counts) if a], dtype=np.int64)
    logA = np.array([math.log(A.counts[d]) for d in ds])
    log_B = np.full(2 * n + 1, -np.inf)
    lg_n = gammaln(n + 1)
    base = (k - n) * math.log(2.0)
    for w in range(1, 2 * n + 1):
        j = w - ds
        ok = (j >= 0) & (j <= n)
        if not ok.any():
            continue
        jj = j[ok]
        log_binom = lg_n - gammaln(jj + 1) - gammaln(n - jj + 1)
        log_B[w] = base + logsumexp(logA[ok] + log_binom)
    return EnsembleWEF(log_B, n, k)


def union_bound_fer0(B: EnsembleWEF, sigma2: float) -> float:
    """``sum_w B_w Q(sqrt(w / sigma2))`` evaluated in the log domain (not clamped)."""
    w = np.arange(B.log_B.size)
    ok = np.isfinite(B.log_B) & (w > 0)
    logQ = log_ndtr(-np.sqrt(w[ok] / sigma2))
    return float(np.exp(logsumexp(B.log_B[ok] + logQ)))


def fer_bound(fer0: float, L: int) -> float:
    if not 0.0 <= fer0 <= 1.0:
        raise ValueError(f"fer0 must lie in [0, 1], got {fer0}")
    if L < 1:
        raise ValueError("L must be >= 1")
    return min(1.0, (L + 1) / 2.0 * fer0)


def complexity_estimate(s: float, ell_bar: float, n: float) -> float:
    """Add-compare-select operations per sub-frame, ``(s + l - 1 + l s) n``."""
    if min(s, ell_bar, n) <= 0:
        raise ValueError("all complexity arguments must be positive")
    return (s + ell_bar - 1 + ell_bar * s) * n


def bound_curve(basic: CodeSpec, L: int, snrs) -> list[dict]:
    """Rows of ``snr_db, sigma2, fer0_bound, fer_bound`` for the given code."""
    B = ensemble_wef(wef(basic).nonzero(), basic.n, basic.k)
    rows = []
    for snr in snrs:
        s2 = 10.0 ** (-snr / 10.0)
        ub = union_bound_fer0(B, s2)
        rows.append({"snr_db": float(snr), "sigma2": s2, "fer0_bound": ub,
                     "fer_bound": fer_bound(min(1.0, ub), L)})
    return rows


# --- exhaustive reference decoders (tiny codes only) ------------------------


def codebook(basic: CodeSpec, limit: int = 10):
    if basic.k > limit:
        raise ValueError(f"exhaustive decoding limited to k <= {limit}")
    U = np.array(list(itertools.product((0, 1), repeat=basic.k)), dtype=np.uint8)
    C = np.array([basic.encode(u) for u in U], dtype=np.uint8)
    return U, C


def exhaustive_map_ml(y0, y1, basic: CodeSpec, R: RandomTransform, sigma2: float):
    """``(v0_MAP, v0_ML)`` by full enumeration of ``(v0, v1)``.

    MAP sums the ``y1`` likelihood over ``v1``; ML maximizes it.
    """
    U, C = codebook(basic)
    Phi = bpsk_map(C)
    l0 = Phi @ np.asarray(y0) / sigma2
    flips = bpsk_map(np.array([R.apply(c) for c in C]))
    M = (flips * np.asarray(y1)[None, :]) @ Phi.T / sigma2
    i_map = int(np.argmax(l0 + logsumexp(M, axis=1)))
    i_ml = int(np.argmax(l0 + M.max(axis=1)))
    return C[i_map], C[i_ml]


def exhaustive_ml3(y0, y1, y2, basic: CodeSpec, R: RandomTransform,
                   terminal: bool = False) -> np.ndarray:
    """ML ``v0`` over three blocks ``(v0, v1, v2)``, by enumeration.

    With ``terminal`` the third block is the frame tail ``v1 R`` (``v2 = 0``).
    """
    U, C = codebook(basic, limit=8)
    Phi = bpsk_map(C)
    flipsR = bpsk_map(np.array([R.apply(c) for c in C]))
    l0 = Phi @ np.asarray(y0)
    # best (v1, v2) tail given v1: corr(v1 + v0 R) handled below, v2 maximized here
    if terminal:
        tail2 = flipsR @ np.asarray(y2)
    else:
        tail2 = ((flipsR * np.asarray(y2)[None, :]) @ Phi.T).max(axis=1)  # indexed by v1
    M1 = (flipsR * np.asarray(y1)[None, :]) @ Phi.T  # [v0, v1]
    total = l0 + (M1 + tail2[None, :]).max(axis=1)
    return C[int(np.argmax(total))]
