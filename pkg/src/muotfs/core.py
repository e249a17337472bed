"""Delay-Doppler channel model: steering vectors, fractional delay and Doppler
operators, and the parametric channel matrix.

All grid quantities are in normalized bins. Flat indices follow the layouts
used by the operators themselves: ``p = m*N + n`` for the delay ramp and
``l = n*M + m`` for the Doppler ramp.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class ConfigError(ValueError):
    """A configuration value violates one of the model invariants."""


@dataclass(frozen=True)
class SystemDims:
    """Grid size and channel spread, in bins."""

    M: int
    N: int
    ell_max: float
    kappa_max: float

    def __post_init__(self):
        if self.M < 2:
            raise ConfigError(f"M must be >= 2 (got {self.M})")
        if self.N < 2:
            raise ConfigError(f"N must be >= 2 (got {self.N})")
        if not 1 <= self.ell_max < self.M:
            raise ConfigError(f"ell_max must satisfy 1 <= ell_max < M (got {self.ell_max})")
        if not 0 < self.kappa_max < self.N / 2:
            raise ConfigError(
                f"kappa_max must satisfy 0 < kappa_max < N/2 (got {self.kappa_max})"
            )

    @property
    def MN(self) -> int:
        return self.M * self.N


@dataclass(frozen=True)
class DDPath:
    """One propagation path: complex gain, delay and Doppler in bins."""

    gain: complex
    delay: float
    doppler: float

    def check(self, dims: SystemDims) -> None:
        if not math.isfinite(abs(self.gain)):
            raise ConfigError("path gain must be finite")
        if not 0.0 <= self.delay <= dims.ell_max - 1:
            raise ConfigError(
                f"path delay {self.delay} outside [0, {dims.ell_max - 1}]"
            )
        half = dims.kappa_max / 2
        if not -half <= self.doppler <= half:
            raise ConfigError(f"path Doppler {self.doppler} outside [{-half}, {half}]")


def steering_delay_M(ell, M):
    """Delay steering vector ``exp(-j 2 pi m ell / M)``, m = 0..M-1."""
    return np.exp(-2j * np.pi * np.arange(M) * ell / M)


def steering_delay_N(ell, M, N):
    """Inter-block delay phase ``exp(-j 2 pi n ell / (M N))``, n = 0..N-1."""
    return np.exp(-2j * np.pi * np.arange(N) * ell / (M * N))


def steering_doppler_N(kappa, N):
    """Doppler steering vector ``exp(+j 2 pi n kappa / N)``, n = 0..N-1."""
    return np.exp(2j * np.pi * np.arange(N) * kappa / N)


def steering_doppler_M(kappa, M, N):
    """Intra-block Doppler phase ``exp(+j 2 pi m kappa / (M N))``, m = 0..M-1."""
    return np.exp(2j * np.pi * np.arange(M) * kappa / (M * N))


def delay_diagonal(ell, dims: SystemDims) -> np.ndarray:
    """Diagonal of B^ell, i.e. ``b_M(ell) kron b_N(ell)``."""
    return np.kron(steering_delay_M(ell, dims.M), steering_delay_N(ell, dims.M, dims.N))


def doppler_diagonal(kappa, dims: SystemDims) -> np.ndarray:
    """Diagonal of Delta^kappa, i.e. ``v_N(kappa) kron v_M(kappa)``."""
    return np.kron(
        steering_doppler_N(kappa, dims.N), steering_doppler_M(kappa, dims.M, dims.N)
    )


def dft_matrix(n: int) -> np.ndarray:
    """Unitary n-point DFT matrix."""
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)


def delay_operator(ell, dims: SystemDims) -> np.ndarray:
    """Fractional delay operator ``F^H B^ell F`` (dense, MN x MN).

    The product is circulant, so it is assembled from its first column
    rather than by two dense matrix products.
    """
    col = np.fft.ifft(delay_diagonal(ell, dims))
    idx = (np.arange(dims.MN)[:, None] - np.arange(dims.MN)[None, :]) % dims.MN
    return col[idx]


def doppler_operator(kappa, dims: SystemDims) -> np.ndarray:
    """Doppler shift operator ``diag(v_N kron v_M)`` (dense, MN x MN)."""
    return np.diag(doppler_diagonal(kappa, dims))


def channel_matrix(paths: Sequence[DDPath], dims: SystemDims) -> np.ndarray:
    """``H = sum_i h_i Pi^{ell_i} Delta^{kappa_i}`` as a dense matrix."""
    H = np.zeros((dims.MN, dims.MN), dtype=complex)
    for p in paths:
        # Pi @ diag(d) scales columns
        H += p.gain * delay_operator(p.delay, dims) * doppler_diagonal(p.doppler, dims)[None, :]
    return H


def channel_gram(paths: Sequence[DDPath], dims: SystemDims) -> np.ndarray:
    """Gram matrix ``G[b, a] = tr((Pi_b Delta_b)^H Pi_a Delta_a)`` of unit-gain paths.

    ``Pi_b^H Pi_a`` is circulant with constant diagonal ``mean(conj(B_b) B_a)``,
    which leaves a product of two length-MN inner products per pair.
    """
    if not paths:
        return np.zeros((0, 0), dtype=complex)
    B = np.array([delay_diagonal(p.delay, dims) for p in paths])
    D = np.array([doppler_diagonal(p.doppler, dims) for p in paths])
    circ = (B.conj() @ B.T) / dims.MN  # [b, a]
    diag = D.conj() @ D.T
    return circ * diag


def channel_distance_sq(
    truth: Sequence[DDPath], estimate: Sequence[DDPath], dims: SystemDims
) -> float:
    """``||H - H_hat||_F^2`` without forming either MN x MN matrix.

    The Gram quadratic form loses relative precision when ``H_hat`` is close
    to ``H``; below ``1e-8`` of the term scale the norm is recomputed from the
    frequency-domain factorization, where truth and estimate cancel entrywise.
    """
    paths = list(truth) + list(estimate)
    if not paths:
        return 0.0
    g = np.array([p.gain for p in truth] + [-p.gain for p in estimate], dtype=complex)
    val = float(np.real(g.conj() @ channel_gram(paths, dims) @ g))
    scale = float(np.sum(np.abs(g) ** 2)) * dims.MN
    if val > 1e-8 * scale:
        return val
    # ||F (H - H_hat)||_F with H = sum g_p F^H diag(B_p) F diag(D_p)
    B = np.array([delay_diagonal(p.delay, dims) for p in paths]).T
    D = np.array([doppler_diagonal(p.doppler, dims) for p in paths])
    Z = B @ (g[:, None] * D)
    return float(np.sum(np.abs(Z) ** 2) / dims.MN)
