"""Block-Markov superposition encoder.

Each information block is encoded by the basic code into ``v[t]`` and sent as
``c[t] = v[t] xor v[t-1] R`` with ``v[-1] = 0``; a final block ``c[L] = v[L-1] R``
terminates the frame. Equivalently this is a unit-memory code with
``G0 = S`` and ``G1 = S R``.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from .trellis import CodeSpec

_MAGIC = b"SRUMR\x00\x01\x00"  # name + format version 1


def _bits_from_words(words: np.ndarray, count: int) -> np.ndarray:
    # word w contributes its bits LSB first
    bits = (words[:, None] >> np.arange(64, dtype=np.uint64)[None, :]) & np.uint64(1)
    return bits.reshape(-1)[:count].astype(np.uint8)


def _pack_rows(matrix: np.ndarray) -> np.ndarray:
    """Pack each row into little-endian uint64 words (bit j of row -> word j//64, bit j%64)."""
    n_rows, n_cols = matrix.shape
    W = (n_cols + 63) // 64
    padded = np.zeros((n_rows, W * 64), dtype=np.uint64)
    padded[:, :n_cols] = matrix
    shifts = np.arange(64, dtype=np.uint64)
    return (padded.reshape(n_rows, W, 64) << shifts).sum(axis=2, dtype=np.uint64)


def pack_bits(v) -> np.ndarray:
    return _pack_rows(np.asarray(v, dtype=np.uint8)[None, :])[0]


def unpack_bits(words: np.ndarray, n: int) -> np.ndarray:
    return _bits_from_words(np.asarray(words, dtype=np.uint64), n)


@njit(cache=True)
def _gf2_vecmat(v, packed):
    W = packed.shape[1]
    acc = np.zeros(W, dtype=np.uint64)
    for i in range(v.shape[0]):
        if v[i]:
            for w in range(W):
                acc[w] ^= packed[i, w]
    return acc


@njit(cache=True)
def _unpack_signs(acc, n, out):
    """BPSK image of packed bits into ``out``."""
    for j in range(n):
        b = (acc[j >> 6] >> np.uint64(j & 63)) & np.uint64(1)
        out[j] = -1.0 if b else 1.0


@dataclass(frozen=True, eq=False)
class RandomTransform:
    """Dense n x n GF(2) matrix drawn bit-by-bit from PCG64 keyed by ``seed``.

    Bit ``i*n + j`` of the raw 64-bit stream (LSB first within each word) is
    entry ``(i, j)``, so the matrix is portable given ``(seed, n)``.
    """

    n: int
    seed: int
    matrix: np.ndarray = field(repr=False)

    @property
    def packed(self) -> np.ndarray:
        p = self.__dict__.get("_packed")
        if p is None:
            p = _pack_rows(self.matrix)
            object.__setattr__(self, "_packed", p)
        return p

    def apply(self, v) -> np.ndarray:
        return apply_transform(v, self)

    def apply_signs(self, v, out=None) -> np.ndarray:
        """``phi(v R)`` without materializing the bit vector."""
        v = np.ascontiguousarray(v, dtype=np.uint8)
        if out is None:
            out = np.empty(self.n)
        _unpack_signs(_gf2_vecmat(v, self.packed), self.n, out)
        return out

    def save(self, path) -> None:
        body = np.packbits(self.matrix, axis=1, bitorder="big")
        header = _MAGIC + struct.pack("<IQ", self.n, self.seed & 0xFFFFFFFFFFFFFFFF)
        Path(path).write_bytes(header + body.tobytes())

    @classmethod
    def load(cls, path) -> "RandomTransform":
        data = Path(path).read_bytes()
        if data[: len(_MAGIC)] != _MAGIC:
            raise ValueError(f"{path}: not a random-transform file")
        n, seed = struct.unpack_from("<IQ", data, len(_MAGIC))
        off = len(_MAGIC) + 12
        row_bytes = (n + 7) // 8
        body = np.frombuffer(data[off:], dtype=np.uint8)
        if body.size != n * row_bytes:
            raise ValueError(f"{path}: truncated body")
        matrix = np.unpackbits(body.reshape(n, row_bytes), axis=1, count=n, bitorder="big")
        return cls(n, seed, matrix)


def sample_transform(seed: int, n: int) -> RandomTransform:
    if n < 1:
        raise ValueError("n must be >= 1")
    bitgen = np.random.PCG64(int(seed))
    words = bitgen.random_raw((n * n + 63) // 64).astype(np.uint64)
    matrix = _bits_from_words(words, n * n).reshape(n, n)
    return RandomTransform(n, int(seed), matrix)


def identity_transform(n: int) -> RandomTransform:
    return RandomTransform(n, -1 & 0xFFFFFFFFFFFFFFFF, np.eye(n, dtype=np.uint8))


def apply_transform(v, R: RandomTransform) -> np.ndarray:
    """Row vector times R over GF(2), via row-XOR of packed words."""
    v = np.ascontiguousarray(v, dtype=np.uint8)
    if v.shape != (R.n,):
        raise ValueError(f"vector length {v.shape} does not match n={R.n}")
    return unpack_bits(_gf2_vecmat(v, R.packed), R.n)


@dataclass
class FrameSet:
    u_blocks: np.ndarray  # (L, k)
    v_blocks: np.ndarray  # (L, n)
    c_blocks: np.ndarray  # (L+1, n)

    @property
    def L(self) -> int:
        return int(self.u_blocks.shape[0])

    @property
    def rate(self) -> float:
        k, n = self.u_blocks.shape[1], self.c_blocks.shape[1]
        return k / n * self.L / (self.L + 1)


def encode_frame(u_blocks, basic: CodeSpec, R: RandomTransform) -> FrameSet:
    u_blocks = np.asarray(u_blocks, dtype=np.uint8)
    if u_blocks.ndim != 2 or u_blocks.shape[1] != basic.k:
        raise ValueError(f"information blocks must have shape (L, {basic.k}), got {u_blocks.shape}")
    if R.n != basic.n:
        raise ValueError(f"transform order {R.n} does not match n={basic.n}")
    L = u_blocks.shape[0]
    v = np.array([basic.encode(u) for u in u_blocks], dtype=np.uint8).reshape(L, basic.n)
    c = np.empty((L + 1, basic.n), dtype=np.uint8)
    prev = np.zeros(basic.n, dtype=np.uint8)
    for t in range(L):
        c[t] = v[t] ^ apply_transform(prev, R)
        prev = v[t]
    c[L] = apply_transform(prev, R)
    return FrameSet(u_blocks, v, c)
