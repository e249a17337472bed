"""Multiuser matrix pencil (MU-MP).

Doppler poles come from a block-Hankel pencil reduced by a truncated SVD;
delays come from projecting the grid onto the estimated Doppler subspace and
reading the phase slope of each column.

The pencil is built on the pilot-equalized grid ``R_TF / x_f`` so every path
is a pure 2-D exponential. Bins where the pilot spectrum vanishes cannot be
equalized; the Hankel then uses the longest zero-free run of delay bins and
the delay pencil length shrinks by the number of excluded bins.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .core import ConfigError
from .gains import EstimationResult, PathEstimate
from .pilot import PilotConfig, associate_users
from .synthesis import TFPilotGrid

ZERO_BIN_RTOL = 1e-12
CLUSTER_TOL = 1e-6


@dataclass(frozen=True)
class MpConfig:
    M_pencil: int = 30
    N_pencil: int = 16
    equalize: bool = True

    def K(self, M: int, N: int):
        return M - self.M_pencil + 1, N - self.N_pencil + 1

    def validate(self, M: int, N: int, P_tot: Optional[int] = None) -> None:
        if not 1 <= self.M_pencil <= M:
            raise ConfigError(f"1 <= M_pencil <= M violated (M_pencil={self.M_pencil}, M={M})")
        if not 1 <= self.N_pencil <= N:
            raise ConfigError(f"1 <= N_pencil <= N violated (N_pencil={self.N_pencil}, N={N})")
        K_M, K_N = self.K(M, N)
        if K_N < 2:
            raise ConfigError(f"K_N = N - N_pencil + 1 >= 2 violated (K_N={K_N})")
        if P_tot is not None:
            if self.M_pencil * self.N_pencil < P_tot:
                raise ConfigError("M_pencil*N_pencil >= P_tot violated")
            if K_M * (K_N - 1) < P_tot:
                raise ConfigError(f"K_M*(K_N-1) >= P_tot violated ({K_M * (K_N - 1)} < {P_tot})")


@dataclass(frozen=True)
class PencilState:
    X: np.ndarray
    K_M: int
    K_N: int
    X_left: Optional[np.ndarray] = None
    X_right: Optional[np.ndarray] = None
    U_s: Optional[np.ndarray] = None
    S_s: Optional[np.ndarray] = None
    V_s: Optional[np.ndarray] = None


def zero_free_run(spectrum, rtol: float = ZERO_BIN_RTOL) -> slice:
    """Longest contiguous run of bins with a nonzero pilot spectrum."""
    mag = np.abs(np.asarray(spectrum))
    ok = mag > rtol * mag.max()
    best, start = (0, 0), None
    for i, good in enumerate(np.append(ok, False)):
        if good and start is None:
            start = i
        elif not good and start is not None:
            if i - start > best[1] - best[0]:
                best = (start, i)
            start = None
    return slice(*best)


def equalized_grid(obs: TFPilotGrid) -> np.ndarray:
    """``R_TF / x_f`` over the longest zero-free bin run."""
    rows = zero_free_run(obs.spectrum)
    return obs.grid[rows] / np.asarray(obs.spectrum)[rows, None]


def hankel_from_array(R: np.ndarray, M_pencil: int, N_pencil: int) -> PencilState:
    """Block Hankel of ``R``: block (i, j) is ``R_{i+j}`` with ``R_n[a, b] = R[a+b, n]``."""
    M, N = R.shape
    K_M, K_N = M - M_pencil + 1, N - N_pencil + 1
    if K_M < 1 or K_N < 1:
        raise ConfigError(f"pencil {M_pencil}x{N_pencil} too large for {M}x{N} data")
    a = np.arange(M_pencil)[:, None]
    b = np.arange(K_M)[None, :]
    H = R[a + b, :]  # [a, b, n]
    i = np.arange(N_pencil)[:, None]
    j = np.arange(K_N)[None, :]
    blocks = H[:, :, i + j]  # [a, b, i, j]
    X = blocks.transpose(2, 0, 3, 1).reshape(N_pencil * M_pencil, K_N * K_M)
    return PencilState(X, K_M, K_N)


def build_block_hankel(obs: TFPilotGrid, cfg: MpConfig) -> PencilState:
    if not cfg.equalize:
        return hankel_from_array(obs.grid, cfg.M_pencil, cfg.N_pencil)
    Y = equalized_grid(obs)
    dropped = obs.grid.shape[0] - Y.shape[0]
    M_p = cfg.M_pencil - dropped
    if M_p < 1:
        raise ConfigError(
            f"pilot spectrum has {dropped} unusable delay bins; M_pencil={cfg.M_pencil} too small"
        )
    return hankel_from_array(Y, M_p, cfg.N_pencil)


def pencil_split(state: PencilState) -> PencilState:
    """Drop the last / first block column to get the left / right pencil."""
    if state.K_N < 2:
        raise ConfigError("K_N >= 2 needed to form a pencil")
    cut = state.K_M * (state.K_N - 1)
    return replace(state, X_left=state.X[:, :cut], X_right=state.X[:, state.K_M :])


def doppler_poles(state: PencilState, P_tot: int, N: int):
    """Reduced-pencil eigenvalues. Returns ``(poles, kappa_obs, state, flags)``."""
    flags = []
    U, s, Vh = np.linalg.svd(state.X_left, full_matrices=False)
    order = min(P_tot, s.size)
    nz = int(np.sum(s[:order] > 1e-13 * s[0])) if s[0] > 0 else 0
    if nz < order:
        flags.append("pencil_rank_deficient")
        order = nz
    U_s, S_s, V_s = U[:, :order], s[:order], Vh[:order].conj().T
    T = (U_s.conj().T @ state.X_right @ V_s) / S_s[:, None]
    poles = np.linalg.eigvals(T) if order else np.zeros(0, complex)
    if poles.size > 1:
        gaps = np.abs(poles[:, None] - poles[None, :]) + np.eye(poles.size)
        if gaps.min() < CLUSTER_TOL:
            flags.append("clustered_poles")
    kappa_obs = (N / (2 * np.pi) * np.angle(poles)) % N
    return poles, kappa_obs, replace(state, U_s=U_s, S_s=S_s, V_s=V_s), flags


def delay_from_projection(obs: TFPilotGrid, poles, M: Optional[int] = None):
    """Per-pole delays from the Doppler-subspace projection of the grid.

    Returns ``(delays, G_hat, flagged)``. Adjacent-row phase increments are
    pilot-compensated and averaged with weights ``|x_f[m] x_f[m+1]|^2``, so
    zero pilot bins carry no weight.
    """
    R = obs.grid
    M = R.shape[0] if M is None else M
    poles = np.asarray(poles, dtype=complex)
    n = np.arange(R.shape[1])
    Theta = poles[None, :] ** n[:, None]  # [n, i]
    Gt, _, rank, sv = np.linalg.lstsq(Theta, R.T, rcond=None)
    flagged = bool(rank < poles.size or (sv.size and sv[-1] < 1e-8 * sv[0]))
    G_hat = Gt.T  # [m, i]
    xf = np.asarray(obs.spectrum)
    # w_m * Gtil[m+1] conj(Gtil[m]) with Gtil = G / x_f, written without division
    prod = G_hat[1:] * G_hat[:-1].conj() * (xf[:-1] * xf[1:].conj())[:, None]
    delays = (-M / (2 * np.pi) * np.angle(prod.sum(axis=0))) % M
    return delays, G_hat, flagged


def run_mp(obs: TFPilotGrid, pilot: PilotConfig, cfg: MpConfig, P_tot: int, dims) -> EstimationResult:
    """Full MU-MP pipeline; gains are left unset."""
    cfg.validate(dims.M, dims.N, P_tot)
    state = pencil_split(build_block_hankel(obs, cfg))
    poles, kappa_obs, state, flags = doppler_poles(state, P_tot, dims.N)
    if poles.size == 0:
        return EstimationResult([], [], flags)
    delays, _, bad = delay_from_projection(obs, poles, dims.M)
    if bad:
        flags.append("ill_conditioned_projection")
    assoc = associate_users(list(kappa_obs), dims, pilot)
    estimates = [
        PathEstimate(q, float(delays[i]), float(kappa))
        for q, members in enumerate(assoc.users)
        for i, kappa in members
    ]
    unassigned = [float(kappa_obs[i]) for i in assoc.unassigned]
    if unassigned:
        flags.append("unassigned_doppler")
    return EstimationResult(estimates, unassigned, sorted(set(flags)))
