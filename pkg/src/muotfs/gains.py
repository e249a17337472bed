"""Path estimates and least-squares gain recovery from a parametric dictionary."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .core import DDPath, SystemDims, steering_delay_M, steering_doppler_N
from .pilot import PilotConfig, doppler_index

COND_LIMIT = 1e10


@dataclass(frozen=True)
class PathEstimate:
    """Estimated path of user ``user``; Doppler is physical (pilot offset removed)."""

    user: int
    delay: float
    doppler: float
    gain: Optional[complex] = None

    def as_path(self) -> DDPath:
        return DDPath(0j if self.gain is None else self.gain, self.delay, self.doppler)


@dataclass
class EstimationResult:
    estimates: list
    unassigned: list = field(default_factory=list)
    flags: list = field(default_factory=list)

    def for_user(self, q: int) -> list:
        return [e for e in self.estimates if e.user == q]


def dictionary_atom(est: PathEstimate, spectrum, dims: SystemDims, pilot: PilotConfig) -> np.ndarray:
    """``vec(diag(x_f) b_M(delay) v_N(doppler + k^q)^T)``, column-major."""
    k = doppler_index(est.user, dims.N, pilot.Q)
    col = np.asarray(spectrum) * steering_delay_M(est.delay, dims.M)
    row = steering_doppler_N(est.doppler + k, dims.N)
    return np.outer(col, row).reshape(-1, order="F")


def dictionary(estimates: Sequence[PathEstimate], spectrum, dims: SystemDims, pilot: PilotConfig) -> np.ndarray:
    return np.stack([dictionary_atom(e, spectrum, dims, pilot) for e in estimates], axis=1)


def ls_gains(grid, estimates: Sequence[PathEstimate], spectrum, dims: SystemDims, pilot: PilotConfig):
    """Fill in gains by least squares against ``vec(R_TF)``.

    Returns ``(estimates_with_gains, ill_posed)``; ``ill_posed`` is set when
    the dictionary condition number exceeds ``COND_LIMIT``.
    """
    if not estimates:
        return [], False
    Psi = dictionary(estimates, spectrum, dims, pilot)
    r = np.asarray(grid).reshape(-1, order="F")
    h, _, _, sv = np.linalg.lstsq(Psi, r, rcond=None)
    ill = bool(sv[-1] == 0 or sv[0] / sv[-1] > COND_LIMIT)
    return [replace(e, gain=complex(g)) for e, g in zip(estimates, h)], ill
