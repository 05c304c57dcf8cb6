"""BPSK over AWGN: mapping, noise, SNR conventions, mutual information.

SNR is ``10*log10(1/sigma2)`` with unit-energy symbols, i.e. the union bound
term for a weight-``w`` error is ``Q(sqrt(w / sigma2))``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ChannelParams:
    sigma2: float

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")

    @classmethod
    def from_snr_db(cls, snr_db: float) -> "ChannelParams":
        return cls(snr_to_sigma2(snr_db))

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.sigma2))

    @property
    def snr_db(self) -> float:
        return float(10.0 * np.log10(1.0 / self.sigma2))


def snr_to_sigma2(snr_db: float) -> float:
    return float(10.0 ** (-snr_db / 10.0))


def ebn0_to_sigma2(ebn0_db: float, rate: float) -> float:
    """Alternative convention, kept for comparison only."""
    return float(1.0 / (2.0 * rate * 10.0 ** (ebn0_db / 10.0)))


def bpsk_map(c) -> np.ndarray:
    """Bit 0 -> +1.0, bit 1 -> -1.0."""
    return 1.0 - 2.0 * np.asarray(c, dtype=np.float64)


def awgn(x, params: ChannelParams, rng: np.random.Generator) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x + params.sigma * rng.standard_normal(x.shape)


def frame_stream(master_seed: int, snr_index: int, frame_index: int) -> np.random.Generator:
    """Independent PCG64 stream keyed by ``(master_seed, snr_index, frame_index)``."""
    ss = np.random.SeedSequence([int(master_seed), int(snr_index), int(frame_index)])
    return np.random.Generator(np.random.PCG64(ss))


_GH_NODES, _GH_WEIGHTS = np.polynomial.hermite_e.hermegauss(128)


def mutual_information(params: ChannelParams) -> float:
    """I(X;Y) in bits for equiprobable BPSK over AWGN.

    By symmetry ``I = 1 - E[log2(1 + exp(-2Y/sigma2))]`` with ``Y ~ N(1, sigma2)``;
    the expectation uses 128-node Gauss-Hermite quadrature.
    """
    s2 = params.sigma2
    y = 1.0 + np.sqrt(s2) * _GH_NODES
    vals = np.logaddexp(0.0, -2.0 * y / s2) / np.log(2.0)
    return float(1.0 - np.dot(_GH_WEIGHTS, vals) / np.sqrt(2.0 * np.pi))
