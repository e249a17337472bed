"""Ground-truth scenarios and the noisy time-frequency pilot observation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .core import ConfigError, DDPath, SystemDims
from .pilot import PilotConfig, doppler_index, pilot_spectrum


@dataclass(frozen=True)
class Scenario:
    dims: SystemDims
    pilot: PilotConfig
    users: tuple  # users[q] is a tuple of DDPath
    seed: int = 0

    def __post_init__(self):
        if len(self.users) != self.pilot.Q:
            raise ConfigError(f"scenario has {len(self.users)} users, pilot config Q={self.pilot.Q}")
        for q, paths in enumerate(self.users):
            if len(paths) < 1:
                raise ConfigError(f"user {q} needs at least one path")

    @property
    def P_tot(self) -> int:
        return sum(len(p) for p in self.users)

    def all_paths(self) -> list:
        return [p for paths in self.users for p in paths]

    def to_dict(self) -> dict:
        d, c = self.dims, self.pilot
        return {
            "M": d.M,
            "N": d.N,
            "Q": c.Q,
            "M_ZC": c.M_ZC,
            "M_CP": c.M_CP,
            "zc_root": c.zc_root,
            "ell_max": d.ell_max,
            "kappa_max": d.kappa_max,
            "users": [
                [
                    {"re": complex(p.gain).real, "im": complex(p.gain).imag,
                     "delay": p.delay, "doppler": p.doppler}
                    for p in paths
                ]
                for paths in self.users
            ],
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        dims = SystemDims(int(d["M"]), int(d["N"]), float(d["ell_max"]), float(d["kappa_max"]))
        pilot = PilotConfig(int(d["M_ZC"]), int(d["M_CP"]), int(d["Q"]), int(d.get("zc_root", 1)))
        users = tuple(
            tuple(DDPath(complex(p["re"], p["im"]), float(p["delay"]), float(p["doppler"])) for p in paths)
            for paths in d["users"]
        )
        return cls(dims, pilot, users, int(d.get("seed", 0)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class TFPilotGrid:
    """Time-frequency pilot observation ``R_TF`` and the pilot spectrum behind it."""

    grid: np.ndarray
    spectrum: np.ndarray
    noise_variance: float = 0.0

    def scaled(self, c: complex) -> "TFPilotGrid":
        return replace(self, grid=self.grid * c, noise_variance=self.noise_variance * abs(c) ** 2)


@dataclass(frozen=True)
class ScenarioConstraints:
    """Draw limits for :func:`random_scenario`."""

    min_paths: int = 1
    max_paths: int = 3
    min_doppler_sep: float = 0.3
    max_rejections: int = 10_000


def tf_pilot_response(scenario: Scenario) -> TFPilotGrid:
    """Noiseless ``R_TF = sum_q sum_i h x_f * b_M(ell) v_N(kappa + k^q)^T``."""
    dims, cfg = scenario.dims, scenario.pilot
    m = np.arange(dims.M)[:, None]
    n = np.arange(dims.N)[None, :]
    R = np.zeros((dims.M, dims.N), dtype=complex)
    for q, paths in enumerate(scenario.users):
        xf = pilot_spectrum(cfg, dims.M, q)[:, None]
        k = doppler_index(q, dims.N, cfg.Q)
        for p in paths:
            R += p.gain * xf * np.exp(-2j * np.pi * m * p.delay / dims.M) * np.exp(
                2j * np.pi * n * (p.doppler + k) / dims.N
            )
    return TFPilotGrid(R, pilot_spectrum(cfg, dims.M, 0), 0.0)


def add_noise(obs: TFPilotGrid, snr_db: float, rng: np.random.Generator) -> TFPilotGrid:
    """Add circular complex Gaussian noise at ``snr_db`` relative to the mean grid power.

    The SNR reference is the mean squared magnitude over all M x N entries of
    the input grid; ``snr_db = inf`` returns the grid untouched.
    """
    if np.isinf(snr_db) and snr_db > 0:
        return obs
    p_sig = float(np.mean(np.abs(obs.grid) ** 2))
    var = p_sig / 10 ** (snr_db / 10)
    w = rng.standard_normal(obs.grid.shape) + 1j * rng.standard_normal(obs.grid.shape)
    w *= np.sqrt(var / 2)
    return TFPilotGrid(obs.grid + w, obs.spectrum, obs.noise_variance + var)


def _draw_user(dims: SystemDims, rng: np.random.Generator, cons: ScenarioConstraints) -> tuple:
    n_paths = int(rng.integers(cons.min_paths, cons.max_paths + 1))
    half = dims.kappa_max / 2
    for _ in range(cons.max_rejections):
        dop = rng.uniform(-half, half, n_paths)
        if n_paths < 2 or np.min(np.diff(np.sort(dop))) >= cons.min_doppler_sep:
            break
    else:
        raise RuntimeError(
            f"could not draw {n_paths} Dopplers with separation {cons.min_doppler_sep} "
            f"in {cons.max_rejections} attempts"
        )
    mag = 1.0 - rng.uniform(0.0, 1.0, n_paths)  # (0, 1]
    phase = rng.uniform(0.0, 2 * np.pi, n_paths)
    delay = rng.uniform(0.0, dims.ell_max - 1, n_paths)
    return tuple(
        DDPath(complex(a * np.exp(1j * ph)), float(l), float(k))
        for a, ph, l, k in zip(mag, phase, delay, dop)
    )


def random_scenario(
    dims: SystemDims,
    pilot: PilotConfig,
    rng: np.random.Generator,
    constraints: Optional[ScenarioConstraints] = None,
    seed: int = 0,
) -> Scenario:
    """Draw a random multiuser scenario (1..3 paths per user by default)."""
    cons = constraints or ScenarioConstraints()
    users = tuple(_draw_user(dims, rng, cons) for _ in range(pilot.Q))
    return Scenario(dims, pilot, users, seed)
