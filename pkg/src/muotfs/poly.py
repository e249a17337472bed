"""Laurent-polynomial tools on the unit circle: weighted Fourier fitting,
companion-matrix rooting and root selection."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


class IllConditionedFit(RuntimeWarning):
    pass


@dataclass(frozen=True)
class UnitCircleSamples:
    angles: np.ndarray
    values: np.ndarray

    @classmethod
    def uniform(cls, values) -> "UnitCircleSamples":
        """Samples at ``-pi + 2 pi m / Q``, m = 0..Q-1."""
        values = np.asarray(values)
        Q = values.shape[0]
        return cls(-np.pi + 2 * np.pi * np.arange(Q) / Q, values)


@dataclass(frozen=True)
class FourierPoly:
    """Coefficients ``f_g`` for g = -G..G, stored in ascending order of g."""

    coeffs: np.ndarray
    G: int

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        g = np.arange(-self.G, self.G + 1)
        return np.sum(self.coeffs * z[..., None] ** g, axis=-1)


def wls_fourier_fit(samples: UnitCircleSamples, G: int, eps_rel: float = 1e-8) -> FourierPoly:
    """Weighted least-squares fit of a degree-G trigonometric polynomial.

    Weights are ``1 / (|d_m| + eps)`` with ``eps = eps_rel * max|d|``. The
    weighted system is solved by least squares on ``sqrt(Gamma) Phi``, which
    has the same minimizer as the normal equations.
    """
    phi = np.asarray(samples.angles, dtype=float)
    d = np.asarray(samples.values, dtype=complex)
    if phi.size < 2 * G + 1:
        raise ValueError(f"need at least 2G+1 = {2 * G + 1} samples, got {phi.size}")
    Phi = np.exp(1j * np.outer(phi, np.arange(2 * G + 1) - G))
    mag = np.abs(d)
    eps = eps_rel * mag.max() if mag.max() > 0 else eps_rel
    sw = 1.0 / np.sqrt(mag + eps)
    A = Phi * sw[:, None]
    f, _, rank, sv = np.linalg.lstsq(A, d * sw, rcond=None)
    if rank < 2 * G + 1:
        warnings.warn(
            f"WLS normal matrix is rank deficient ({rank} < {2 * G + 1})",
            IllConditionedFit,
            stacklevel=2,
        )
    return FourierPoly(f, G)


def laurent_roots(coeffs, G: int, trim: float = 1e-12) -> np.ndarray:
    """Roots of ``z^G * sum_{g=-G}^{G} f_g z^g`` via companion-matrix eigenvalues.

    ``coeffs`` is ascending in g. Coefficients below ``trim`` times the largest
    magnitude are dropped from both ends before the companion matrix is
    formed; low-order zeros only contribute a power of z, not roots of f.
    """
    c = np.asarray(coeffs, dtype=complex)  # c[k] multiplies z^k
    if c.size != 2 * G + 1:
        raise ValueError(f"expected {2 * G + 1} coefficients, got {c.size}")
    scale = np.abs(c).max()
    if scale == 0:
        raise ValueError("all-zero polynomial has no well-defined roots")
    keep = np.nonzero(np.abs(c) > trim * scale)[0]
    c = c[keep[0] : keep[-1] + 1]
    deg = c.size - 1
    if deg < 1:
        return np.zeros(0, dtype=complex)
    comp = np.zeros((deg, deg), dtype=complex)
    comp[1:, :-1] = np.eye(deg - 1)
    comp[:, -1] = -c[:-1] / c[-1]
    return np.linalg.eigvals(comp)


@dataclass(frozen=True)
class RootSelection:
    roots: np.ndarray
    relaxed: bool = False
    shortfall: bool = False


def _angle_gap(a, b):
    return np.abs(np.angle(np.exp(1j * (a - b))))


def select_inside_roots(roots, count: int, min_angle_sep: float = 0.0) -> RootSelection:
    """Pick ``count`` roots inside the unit circle, closest to it first.

    Roots are taken greedily by ``1 - |z|``; a root is skipped when its angle
    is within ``min_angle_sep`` of one already kept. If the separation rule
    leaves fewer than ``count`` roots, the remainder is filled ignoring it.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    roots = np.asarray(roots, dtype=complex)
    inside = roots[np.abs(roots) < 1]
    inside = inside[np.argsort(1 - np.abs(inside), kind="stable")]
    chosen: list = []
    for i, z in enumerate(inside):
        if len(chosen) == count:
            break
        if all(_angle_gap(np.angle(z), np.angle(inside[j])) >= min_angle_sep for j in chosen):
            chosen.append(i)
    relaxed = False
    for i in range(inside.size):
        if len(chosen) == count:
            break
        if i not in chosen:
            chosen.append(i)
            relaxed = True
    return RootSelection(inside[chosen], relaxed, len(chosen) < count)
