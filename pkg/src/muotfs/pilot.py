"""Multiuser pilot-with-cyclic-prefix (MU-PCP) design and user association.

Each user sends the same-length Zadoff-Chu pilot (plus a cyclic prefix) in a
single Doppler column ``k^q``; users are separated along Doppler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import ConfigError, SystemDims


@dataclass(frozen=True)
class PilotConfig:
    """Pilot layout shared by all users.

    ``user_roots`` optionally overrides the ZC root per user; by default every
    user reuses ``zc_root``.
    """

    M_ZC: int
    M_CP: int
    Q: int
    zc_root: int = 1
    user_roots: Optional[tuple] = field(default=None)

    @property
    def M_PCP(self) -> int:
        return self.M_CP + self.M_ZC

    def root_for(self, q: int) -> int:
        return self.zc_root if self.user_roots is None else self.user_roots[q]

    def validate(self, dims: SystemDims) -> None:
        """Raise ConfigError naming the first violated invariant."""
        if self.M_ZC < 1:
            raise ConfigError(f"M_ZC must be positive (got {self.M_ZC})")
        if self.Q < 1:
            raise ConfigError(f"Q must be positive (got {self.Q})")
        if self.M_CP < math.ceil(dims.ell_max):
            raise ConfigError(
                f"M_CP >= ceil(ell_max) violated ({self.M_CP} < {math.ceil(dims.ell_max)})"
            )
        if self.M_PCP >= dims.M:
            raise ConfigError(f"M_PCP = M_CP + M_ZC < M violated ({self.M_PCP} >= {dims.M})")
        roots = [self.zc_root] if self.user_roots is None else list(self.user_roots)
        if self.user_roots is not None and len(roots) != self.Q:
            raise ConfigError(f"user_roots needs Q={self.Q} entries (got {len(roots)})")
        for u in roots:
            if math.gcd(u, self.M_ZC) != 1:
                raise ConfigError(f"zc_root {u} is not coprime to M_ZC={self.M_ZC}")
        if not capacity_check(dims.N, dims.kappa_max, self.Q):
            raise ConfigError(
                f"user capacity Q <= floor(N/(2*kappa_max+1)) violated "
                f"(Q={self.Q}, bound={math.floor(dims.N / (2 * dims.kappa_max + 1))})"
            )


def zc_sequence(M_ZC: int, u: int = 1) -> np.ndarray:
    """Zadoff-Chu sequence of length ``M_ZC`` and root ``u``."""
    if math.gcd(u, M_ZC) != 1:
        raise ValueError(f"ZC root {u} must be coprime to length {M_ZC}")
    n = np.arange(M_ZC)
    if M_ZC % 2 == 0:
        return np.exp(-1j * np.pi * u * n * n / M_ZC)
    return np.exp(-1j * np.pi * u * n * (n + 1) / M_ZC)


def doppler_index(q: int, N: int, Q: int) -> int:
    """Pilot Doppler column of user ``q``: ``floor(floor(N/Q)/2) + q*floor(N/Q)``."""
    step = N // Q
    return step // 2 + q * step


def capacity_check(N: int, kappa_max: float, Q: int) -> bool:
    """True when ``Q`` users fit without Doppler-window overlap."""
    return Q <= math.floor(N / (2 * kappa_max + 1))


def pcp_grid(cfg: PilotConfig, dims: SystemDims, q: int) -> np.ndarray:
    """M x N delay-Doppler pilot pattern of user ``q``."""
    if cfg.M_PCP >= dims.M:
        raise ConfigError(f"M_PCP = {cfg.M_PCP} must be < M = {dims.M}")
    zc = zc_sequence(cfg.M_ZC, cfg.root_for(q))
    X = np.zeros((dims.M, dims.N), dtype=complex)
    k = doppler_index(q, dims.N, cfg.Q)
    if cfg.M_CP:
        X[: cfg.M_CP, k] = zc[-cfg.M_CP:]
    X[cfg.M_CP : cfg.M_PCP, k] = zc
    return X


def pilot_spectrum(cfg: PilotConfig, M: int, q: int = 0) -> np.ndarray:
    """Zero-padded, unnormalized M-point DFT of user ``q``'s ZC sequence."""
    if M < cfg.M_ZC:
        raise ValueError(f"M = {M} must be >= M_ZC = {cfg.M_ZC}")
    return np.fft.fft(zc_sequence(cfg.M_ZC, cfg.root_for(q)), M)


@dataclass
class Association:
    """Observed Dopplers grouped per user.

    ``users[q]`` holds ``(index, physical_doppler)`` pairs where ``index``
    points back into the observed list; ``unassigned`` holds the indices that
    fell outside every user window.
    """

    users: list
    unassigned: list


def _cyclic_offset(value: float, center: float, N: int) -> float:
    """``value - center`` wrapped to [-N/2, N/2)."""
    return (value - center + N / 2) % N - N / 2


def associate_users(observed: Sequence[float], dims: SystemDims, cfg: PilotConfig) -> Association:
    """Assign observed Dopplers to the user windows ``[k^q - kappa_max, k^q + kappa_max]``."""
    if not capacity_check(dims.N, dims.kappa_max, cfg.Q):
        raise ConfigError("user Doppler windows overlap: capacity check fails")
    centers = [doppler_index(q, dims.N, cfg.Q) for q in range(cfg.Q)]
    users: list = [[] for _ in range(cfg.Q)]
    unassigned = []
    for i, obs in enumerate(observed):
        for q, k in enumerate(centers):
            off = _cyclic_offset(obs, k, dims.N)
            if abs(off) <= dims.kappa_max:
                users[q].append((i, off))
                break
        else:
            unassigned.append(i)
    return Association(users, unassigned)
