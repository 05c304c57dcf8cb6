"""Empirical divergence test and threshold tables.

``D(x, y) = (1/n) log2 P(y|x) / P(y)`` with ``P(y)`` the product over
coordinates of ``(P(y_i|0) + P(y_i|1)) / 2``. Per coordinate this reduces to
``1 - log2(1 + exp(-2 y_i phi(x_i) / sigma2))``, computed through softplus.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from .basic_code import SerialListViterbi, _viterbi, viterbi
from .channel import bpsk_map, frame_stream, snr_to_sigma2
from .codec import RandomTransform, _gf2_vecmat, _unpack_signs
from .trellis import CodeSpec, Trellis

_LN2 = math.log(2.0)


@njit(cache=True)
def _softplus(a):
    if a > 0:
        return a + math.log1p(math.exp(-a))
    return math.log1p(math.exp(a))


@njit(cache=True)
def _edf_signs(x, y, sigma2):
    acc = 0.0
    for i in range(y.shape[0]):
        acc += _softplus(-2.0 * y[i] * x[i] / sigma2)
    return 1.0 - acc / (_LN2 * y.shape[0])


@njit(cache=True)
def _edf_path(path, signs, out_off, out_len, z, sigma2):
    acc = 0.0
    for t in range(path.shape[0]):
        e = path[t]
        o = out_off[t]
        for j in range(out_len[t]):
            acc += _softplus(-2.0 * z[o + j] * signs[t, e, j] / sigma2)
    return 1.0 - acc / (_LN2 * z.shape[0])


@njit(cache=True)
def _second_term(v, y1, packed, src, dst, num_edges, signs, out_off, out_len,
                 starts, S, tail_biting, sigma2, last, z1):
    """Flip ``y1`` by ``phi(v R)`` into ``z1`` and score it.

    Returns ``(D, corr, path)``: the EDF of the inner Viterbi output on ``z1``
    (or of the all-zero word when ``last``), its correlation metric, and the
    inner path.
    """
    n = y1.shape[0]
    _unpack_signs(_gf2_vecmat(v, packed), n, z1)
    for i in range(n):
        z1[i] *= y1[i]
    if last:
        ones = np.ones(n)
        return _edf_signs(ones, z1, sigma2), z1.sum(), np.empty(0, dtype=np.int64)
    corr, path = _viterbi(src, dst, num_edges, signs, out_off, out_len, z1, starts, S, tail_biting)
    return _edf_path(path, signs, out_off, out_len, z1, sigma2), corr, path


def edf(x, y, sigma2: float) -> float:
    """Empirical divergence of binary word ``x`` against received ``y``, in bits."""
    y = np.ascontiguousarray(y, dtype=np.float64)
    x = np.asarray(x)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    return float(_edf_signs(bpsk_map(x), y, float(sigma2)))


class M2Scorer:
    """Binds trellis, transform and noise level for repeated M2 evaluations."""

    def __init__(self, trellis: Trellis, R: RandomTransform, sigma2: float):
        if R.n != trellis.n:
            raise ValueError(f"transform order {R.n} does not match n={trellis.n}")
        self.trellis = trellis
        self.R = R
        self.sigma2 = float(sigma2)
        self._z1 = np.empty(trellis.n)
        tr = trellis
        self._args = (R.packed, tr.src, tr.dst, tr.num_edges, tr.signs, tr.out_off,
                      tr.out_len, tr.start_states, tr.num_states, tr.tail_biting)

    def first_term(self, path, z0) -> float:
        tr = self.trellis
        return float(_edf_path(path, tr.signs, tr.out_off, tr.out_len, z0, self.sigma2))

    def second_term(self, code_bits, y1, last: bool = False):
        """``(D2, corr2, inner_path)`` for a candidate with code bits ``code_bits``."""
        d, corr, path = _second_term(code_bits, y1, *self._args, self.sigma2, last, self._z1)
        return float(d), float(corr), path

    def flipped(self) -> np.ndarray:
        """``z1`` left behind by the last :meth:`second_term` call."""
        return self._z1


def m2_metric(candidate, y0, y1, R: RandomTransform, basic: CodeSpec, sigma2: float,
              last: bool = False):
    """Soft metric ``D(v, y0) + D(VA(z1), z1)`` with ``z1 = y1 * phi(v R)``.

    Returns ``(M2, inner_codeword)``; with ``last`` the inner word is the known
    all-zero termination block.
    """
    candidate = np.ascontiguousarray(candidate, dtype=np.uint8)
    y0 = np.ascontiguousarray(y0, dtype=np.float64)
    y1 = np.ascontiguousarray(y1, dtype=np.float64)
    sc = M2Scorer(basic.trellis, R, sigma2)
    d1 = edf(candidate, y0, sigma2)
    d2, _, path = sc.second_term(candidate, y1, last)
    inner = np.zeros(basic.n, dtype=np.uint8) if last else basic.trellis.path_codeword(path)
    return d1 + d2, inner


# --- threshold tables -----------------------------------------------------

REFERENCE_SNRS = (2.0, 2.5, 3.0, 3.5, 4.0)
REFERENCE_A = (1.3, 1.35, 1.4, 1.45, 1.5)
REFERENCE_B = (0.95, 1.0, 1.05, 1.1, 1.15)
POLICIES = ("paper-A", "paper-B", "learned", "inf")


@dataclass(frozen=True)
class ThresholdTable:
    """Per-SNR acceptance thresholds, interpolated linearly in dB and clamped."""

    snr_db: tuple[float, ...]
    T: tuple[float, ...]
    code_id: str = ""
    ell_max: int = 64
    policy: str = ""
    seed: int | None = None
    flags: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if len(self.snr_db) != len(self.T) or not self.snr_db:
            raise ValueError("threshold table needs matching, nonempty snr and T lists")
        if any(b <= a for a, b in zip(self.snr_db, self.snr_db[1:])):
            raise ValueError("threshold snr values must be strictly increasing")

    def lookup(self, snr_db: float) -> float:
        return float(np.interp(snr_db, self.snr_db, self.T))

    def covers(self, snr_db: float) -> bool:
        return snr_db in self.snr_db

    def to_text(self) -> str:
        lines = [
            "# srumcc-thresholds v1",
            f"# code_id={self.code_id}",
            f"# ell_max={self.ell_max}",
            f"# policy={self.policy}",
            f"# seed={'' if self.seed is None else self.seed}",
        ]
        if self.flags:
            lines.append(f"# flags={';'.join(self.flags)}")
        lines.append("snr_db,T")
        lines += [f"{s!r},{t!r}" for s, t in zip(self.snr_db, self.T)]
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> "ThresholdTable":
        meta, rows = {}, []
        lines = text.splitlines()
        if not lines or not lines[0].startswith("# srumcc-thresholds v1"):
            raise ValueError("not a v1 threshold table")
        for line in lines[1:]:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key] = val
            elif line != "snr_db,T":
                s, t = line.split(",")
                rows.append((float(s), float(t)))
        seed = meta.get("seed", "")
        return cls(
            tuple(r[0] for r in rows),
            tuple(r[1] for r in rows),
            code_id=meta.get("code_id", ""),
            ell_max=int(meta.get("ell_max", 64)),
            policy=meta.get("policy", ""),
            seed=int(seed) if seed else None,
            flags=tuple(f for f in meta.get("flags", "").split(";") if f),
        )

    @classmethod
    def load(cls, path) -> "ThresholdTable":
        return cls.from_text(Path(path).read_text())


def reference_table(policy: str, code_id: str = "conv:[27,31]o:k=32:tb", ell_max: int = 64) -> ThresholdTable:
    values = {"paper-A": REFERENCE_A, "paper-B": REFERENCE_B}[policy]
    return ThresholdTable(REFERENCE_SNRS, values, code_id=code_id, ell_max=ell_max, policy=policy)


def constant_table(T: float, policy: str = "inf", code_id: str = "", ell_max: int = 64) -> ThresholdTable:
    return ThresholdTable((0.0,), (float(T),), code_id=code_id, ell_max=ell_max, policy=policy)


@dataclass
class M2Populations:
    correct: np.ndarray
    erroneous: np.ndarray


def m2_populations(basic: CodeSpec, R: RandomTransform, snr_db: float, ell_max: int,
                   trials: int, seed: int = 0, snr_index: int = 0) -> M2Populations:
    """M2 of the correct and the erroneous candidates in the first ``ell_max`` of the list.

    Each trial draws a fresh ``(v0, v1)`` pair, sends ``(v0, v1 + v0 R)`` and
    scores every listed candidate of ``y0``.
    """
    tr = basic.trellis
    sigma2 = snr_to_sigma2(snr_db)
    sigma = math.sqrt(sigma2)
    sc = M2Scorer(tr, R, sigma2)
    correct, wrong = [], []
    for i in range(trials):
        rng = frame_stream(seed, snr_index, i)
        u = rng.integers(0, 2, (2, basic.k), dtype=np.uint8)
        v0, v1 = basic.encode(u[0]), basic.encode(u[1])
        c1 = v1 ^ R.apply(v0)
        y0 = bpsk_map(v0) + sigma * rng.standard_normal(basic.n)
        y1 = bpsk_map(c1) + sigma * rng.standard_normal(basic.n)
        it = SerialListViterbi(tr, y0)
        for _ in range(ell_max):
            item = it.next_path()
            if item is None:
                break
            path = item[0]
            bits = tr.path_codeword(path)
            m2 = sc.first_term(path, y0) + sc.second_term(bits, y1)[0]
            (correct if np.array_equal(bits, v0) else wrong).append(m2)
    return M2Populations(np.array(correct), np.array(wrong))


def learned_threshold(pop: M2Populations, q: float = 0.01, q_err: float = 0.99):
    """``T = max(q-quantile of correct, q_err-quantile of erroneous)``.

    Returns ``(T, flags)``; an empty erroneous population falls back to the
    correct-candidate quantile alone and is flagged.
    """
    flags = []
    if pop.correct.size == 0:
        raise ValueError("no correct-candidate samples; raise trials or ell_max")
    T = float(np.quantile(pop.correct, q))
    if pop.erroneous.size:
        T = max(T, float(np.quantile(pop.erroneous, q_err)))
    else:
        flags.append("no-erroneous-samples")
    return T, flags


def calibrate_thresholds(basic: CodeSpec, R: RandomTransform, snr_list, ell_max: int = 64,
                         trials: int = 1000, policy: str = "learned", seed: int = 0,
                         q: float = 0.01) -> ThresholdTable:
    if policy in ("paper-A", "paper-B"):
        return reference_table(policy, str(basic), ell_max)
    if policy == "inf":
        return constant_table(math.inf, code_id=str(basic), ell_max=ell_max)
    if policy != "learned":
        raise ValueError(f"unknown threshold policy {policy!r}")
    if trials < 1000:
        raise ValueError("calibration needs at least 1000 trials per SNR")
    snrs = sorted(float(s) for s in snr_list)
    Ts, flags = [], []
    for j, snr in enumerate(snrs):
        pop = m2_populations(basic, R, snr, ell_max, trials, seed=seed, snr_index=j)
        T, fl = learned_threshold(pop, q)
        Ts.append(T)
        flags += [f"{snr}:{f}" for f in fl]
    return ThresholdTable(tuple(snrs), tuple(Ts), code_id=str(basic), ell_max=ell_max,
                          policy="learned", seed=seed, flags=tuple(flags))


# --- histograms -----------------------------------------------------------

EDF_LABELS = ("transmitted", "random-word", "va-output", "random-flip")
M2_LABELS = ("m2-correct", "m2-erroneous")


def collect_histograms(basic: CodeSpec, sigma2: float, trials: int, seed: int = 0):
    """EDF samples for the four reference cases, keyed by label."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    tr = basic.trellis
    sigma = math.sqrt(sigma2)
    out = {lab: np.empty(trials) for lab in EDF_LABELS}
    for i in range(trials):
        rng = frame_stream(seed, 0, i)
        u = rng.integers(0, 2, basic.k, dtype=np.uint8)
        v = basic.encode(u)
        y = bpsk_map(v) + sigma * rng.standard_normal(basic.n)
        x = rng.integers(0, 2, basic.n, dtype=np.uint8)
        out["transmitted"][i] = edf(v, y, sigma2)
        out["random-word"][i] = edf(x, y, sigma2)
        out["va-output"][i] = edf(viterbi(tr, y)[1], y, sigma2)
        yt = bpsk_map(x) * y
        out["random-flip"][i] = edf(viterbi(tr, yt)[1], yt, sigma2)
    return out
