"""Multiuser weighted MUSIC (MU-W-MUSIC).

Doppler-direction spatial smoothing builds a covariance whose noise subspace,
weighted by the pilot spectrum, defines a matrix null spectrum ``D(z)``. The
determinant of ``D`` on the unit circle is approximated by a truncated
Fourier series (weighted LS), rooted, and the selected Doppler roots each
yield a scalar delay polynomial.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .core import ConfigError
from .gains import EstimationResult, PathEstimate
from .pilot import PilotConfig, associate_users
from .poly import UnitCircleSamples, laurent_roots, select_inside_roots, wls_fourier_fit
from .synthesis import TFPilotGrid

ZERO_BIN_RTOL = 1e-12


@dataclass(frozen=True)
class WMusicConfig:
    M_sub: int = 16
    N_sub: int = 20
    G: int = 51
    Q_sample: int = 128
    eps_rel: float = 1e-8
    # radians; None means 0.05 Doppler bins
    min_angle_sep: Optional[float] = None
    project_roots: bool = True

    def angle_sep(self, N: int) -> float:
        if self.min_angle_sep is None:
            return 2 * np.pi * 0.05 / N
        return self.min_angle_sep

    def validate(self, M: int, N: int, P_tot: Optional[int] = None) -> None:
        if not 1 <= self.M_sub <= M:
            raise ConfigError(f"1 <= M_sub <= M violated (M_sub={self.M_sub}, M={M})")
        if not 1 <= self.N_sub <= N:
            raise ConfigError(f"1 <= N_sub <= N violated (N_sub={self.N_sub}, N={N})")
        if self.Q_sample < 2 * self.G + 1:
            raise ConfigError(f"Q_sample >= 2G+1 violated ({self.Q_sample} < {2 * self.G + 1})")
        if P_tot is not None and self.M_sub * self.N_sub <= P_tot:
            raise ConfigError(
                f"M_sub*N_sub > P_tot violated ({self.M_sub * self.N_sub} <= {P_tot})"
            )


@dataclass(frozen=True)
class SubspaceState:
    covariance: np.ndarray
    noise_basis: np.ndarray
    effective: Optional[np.ndarray] = None
    # delay bins (within the first M_sub) where the pilot spectrum is nonzero
    support: Optional[np.ndarray] = None
    M_sub: int = 0
    N_sub: int = 0

    def blocks(self) -> np.ndarray:
        """``effective`` viewed as ``[n, m, n', m']``."""
        return self.effective.reshape(self.N_sub, self.M_sub, self.N_sub, self.M_sub)


def snapshots(obs: TFPilotGrid, cfg: WMusicConfig) -> np.ndarray:
    """Doppler-sliding M_sub x N_sub windows, vectorized column-major."""
    R = obs.grid
    M, N = R.shape
    if cfg.N_sub > N or cfg.M_sub > M:
        raise ConfigError(f"window {cfg.M_sub}x{cfg.N_sub} exceeds grid {M}x{N}")
    L = N - cfg.N_sub + 1
    cols = [R[: cfg.M_sub, j : j + cfg.N_sub].reshape(-1, order="F") for j in range(L)]
    return np.stack(cols, axis=1)


def covariance_and_noise_subspace(snaps: np.ndarray, P_tot: int, M_sub: int, N_sub: int) -> SubspaceState:
    dim, L = snaps.shape
    if L < 1:
        raise ValueError("need at least one snapshot")
    if P_tot >= dim:
        raise ConfigError(f"P_tot={P_tot} must be below the snapshot dimension {dim}")
    K = snaps @ snaps.conj().T / L
    K = (K + K.conj().T) / 2
    _, vecs = np.linalg.eigh(K)  # ascending
    En = vecs[:, : dim - P_tot]
    return SubspaceState(K, En, M_sub=M_sub, N_sub=N_sub)


def effective_projection(state: SubspaceState, spectrum: np.ndarray) -> SubspaceState:
    """Pilot-weighted noise projector ``(I kron X_f)^H E_n E_n^H (I kron X_f)``."""
    xf = np.asarray(spectrum)[: state.M_sub]
    w = np.tile(xf, state.N_sub)
    P = state.noise_basis @ state.noise_basis.conj().T
    E = w.conj()[:, None] * P * w[None, :]
    support = np.nonzero(np.abs(xf) > ZERO_BIN_RTOL * np.abs(spectrum).max())[0]
    return replace(state, effective=(E + E.conj().T) / 2, support=support)


def doppler_null_matrix(state: SubspaceState, z) -> np.ndarray:
    """``D(z) = (v(z) kron I)^H E_eff (v(z) kron I)`` for scalar or array ``z``.

    Array input returns a stack of M_sub x M_sub matrices.
    """
    z = np.asarray(z, dtype=complex)
    n = np.arange(state.N_sub)
    v = z[..., None] ** n
    return np.einsum("...n,nakb,...k->...ab", v.conj(), state.blocks(), v, optimize=True)


@dataclass(frozen=True)
class DopplerRoot:
    root: complex
    kappa_obs: float


def _det_samples(state: SubspaceState, angles: np.ndarray) -> np.ndarray:
    """det D on the support bins, rescaled so the largest magnitude is 1."""
    D = doppler_null_matrix(state, np.exp(1j * angles))
    S = state.support
    D = D[:, S[:, None], S[None, :]]
    sign, logabs = np.linalg.slogdet(D)
    finite = np.isfinite(logabs)
    if not finite.any():
        return np.zeros(angles.size, dtype=complex)
    top = logabs[finite].max()
    out = np.zeros(angles.size, dtype=complex)
    out[finite] = sign[finite] * np.exp(logabs[finite] - top)
    return out


def estimate_dopplers(state: SubspaceState, cfg: WMusicConfig, P_tot: int, N: int):
    """Return ``(roots, flags)`` with roots a list of :class:`DopplerRoot`."""
    if P_tot == 0:
        return [], []
    samples = UnitCircleSamples.uniform(np.zeros(cfg.Q_sample))
    d = _det_samples(state, samples.angles)
    fit = wls_fourier_fit(replace(samples, values=d), cfg.G, cfg.eps_rel)
    roots = laurent_roots(fit.coeffs, cfg.G)
    sel = select_inside_roots(roots, P_tot, cfg.angle_sep(N))
    flags = []
    if sel.relaxed:
        flags.append("doppler_sep_relaxed")
    if sel.shortfall:
        flags.append("doppler_root_shortfall")
    out = [DopplerRoot(complex(z), float((N / (2 * np.pi) * np.angle(z)) % N)) for z in sel.roots]
    return out, flags


def delay_coefficients(Dk: np.ndarray) -> np.ndarray:
    """Ascending Laurent coefficients of ``b(z)^H D b(z)``, ``b(z)[m] = z^m``.

    The coefficient of ``z^k`` is the sum of the k-th diagonal of ``D``.
    """
    Ms = Dk.shape[0]
    return np.array([np.trace(Dk, offset=k) for k in range(-(Ms - 1), Ms)])


def estimate_delay_for_root(state: SubspaceState, z_kappa: complex, M: int, project: bool = True):
    """Delay (bins) for one Doppler root; returns ``(delay, flagged)``.

    ``flagged`` is set when no delay root lies inside the unit circle and the
    closest root of any modulus was used instead. Zero pilot bins leave zero
    rows in ``D`` and drop out of the coefficient sums on their own.
    """
    z = z_kappa / abs(z_kappa) if project else z_kappa
    Dk = doppler_null_matrix(state, z)
    G = Dk.shape[0] - 1
    c = delay_coefficients(Dk)
    if G == 0 or np.abs(c).max() == 0:
        return 0.0, True
    roots = laurent_roots(c, G)
    inside = roots[np.abs(roots) < 1]
    flagged = inside.size == 0
    pool = roots if flagged else inside
    if pool.size == 0:
        return 0.0, True
    zl = pool[np.argmin(np.abs(1 - np.abs(pool)))]
    return float((-M / (2 * np.pi) * np.angle(zl)) % M), flagged


def run_wmusic(obs: TFPilotGrid, pilot: PilotConfig, cfg: WMusicConfig, P_tot: int, dims) -> EstimationResult:
    """Full MU-W-MUSIC pipeline; gains are left unset."""
    cfg.validate(dims.M, dims.N, P_tot)
    snaps = snapshots(obs, cfg)
    state = covariance_and_noise_subspace(snaps, P_tot, cfg.M_sub, cfg.N_sub)
    state = effective_projection(state, obs.spectrum)
    flags = []
    if state.support.size < cfg.M_sub:
        flags.append("pilot_spectrum_zero_bins")
    roots, f = estimate_dopplers(state, cfg, P_tot, dims.N)
    flags += f
    assoc = associate_users([r.kappa_obs for r in roots], dims, pilot)
    estimates = []
    for q, members in enumerate(assoc.users):
        for idx, kappa in members:
            delay, bad = estimate_delay_for_root(state, roots[idx].root, dims.M, cfg.project_roots)
            if bad:
                flags.append("delay_root_outside")
            estimates.append(PathEstimate(q, delay, kappa))
    unassigned = [roots[i].kappa_obs for i in assoc.unassigned]
    if unassigned:
        flags.append("unassigned_doppler")
    return EstimationResult(estimates, unassigned, sorted(set(flags)))
