"""Numerical invariant checks run by ``muotfs selftest``.

Each check is small and self-contained so the command finishes in seconds.
"""

from __future__ import annotations

import itertools

import numpy as np

from .core import SystemDims, delay_diagonal, delay_operator
from .gains import PathEstimate, dictionary, ls_gains
from .metrics import match_paths, pair_cost
from .pilot import PilotConfig, doppler_index, zc_sequence
from .synthesis import Scenario, add_noise, random_scenario, tf_pilot_response
from .wmusic import WMusicConfig, covariance_and_noise_subspace, snapshots

SMALL = SystemDims(8, 8, 3, 2)


def check_delay_unitary() -> tuple:
    Pi = delay_operator(1.37, SMALL)
    err = np.abs(Pi.conj().T @ Pi - np.eye(SMALL.MN)).max()
    return err < 1e-10, f"max |Pi^H Pi - I| = {err:.1e}"


def check_integer_shift() -> tuple:
    Pi = delay_operator(3, SMALL)
    perm = np.roll(np.eye(SMALL.MN), 3, axis=0)
    err = np.abs(Pi - perm).max()
    return err < 1e-10, f"max |Pi^3 - shift| = {err:.1e}"


def check_semigroup() -> tuple:
    a, b = 0.4, 1.9
    err = np.abs(delay_diagonal(a, SMALL) * delay_diagonal(b, SMALL) - delay_diagonal(a + b, SMALL)).max()
    return err < 1e-12, f"max |B^a B^b - B^(a+b)| = {err:.1e}"


def check_zc_autocorrelation() -> tuple:
    worst = 0.0
    for L, u in ((8, 1), (8, 3), (7, 2), (13, 5)):
        z = zc_sequence(L, u)
        for s in range(1, L):
            worst = max(worst, abs(np.vdot(z, np.roll(z, s))))
    return worst < 1e-10, f"max off-peak |autocorr| = {worst:.1e}"


def _ref_scenario(seed: int) -> Scenario:
    dims = SystemDims(32, 64, 4, 6)
    return random_scenario(dims, PilotConfig(8, 4, 4, 1), np.random.default_rng(seed), seed=seed)


def snapshot_steering(delay, doppler_obs, spectrum, M, N, M_sub, N_sub) -> np.ndarray:
    """Snapshot-space response of one path; index ``n * M_sub + m``."""
    col = np.asarray(spectrum)[:M_sub] * np.exp(-2j * np.pi * np.arange(M_sub) * delay / M)
    row = np.exp(2j * np.pi * np.arange(N_sub) * doppler_obs / N)
    return np.kron(row, col)


def check_subspace_orthogonality() -> tuple:
    sc = _ref_scenario(1)
    obs = tf_pilot_response(sc)
    cfg = WMusicConfig()
    st = covariance_and_noise_subspace(snapshots(obs, cfg), sc.P_tot, cfg.M_sub, cfg.N_sub)
    worst = 0.0
    for q, paths in enumerate(sc.users):
        k = doppler_index(q, sc.dims.N, sc.pilot.Q)
        for p in paths:
            a = snapshot_steering(p.delay, p.doppler + k, obs.spectrum, sc.dims.M, sc.dims.N,
                                  cfg.M_sub, cfg.N_sub)
            worst = max(worst, np.linalg.norm(st.noise_basis.conj().T @ a) / np.linalg.norm(a))
    return worst < 1e-8, f"max |E_n^H a| / |a| = {worst:.1e}"


def check_ls_residual() -> tuple:
    sc = _ref_scenario(2)
    obs = add_noise(tf_pilot_response(sc), 10.0, np.random.default_rng(3))
    est = [PathEstimate(q, p.delay + 0.05, p.doppler - 0.02) for q, ps in enumerate(sc.users) for p in ps]
    filled, _ = ls_gains(obs.grid, est, obs.spectrum, sc.dims, sc.pilot)
    Psi = dictionary(est, obs.spectrum, sc.dims, sc.pilot)
    r = obs.grid.reshape(-1, order="F")
    res = r - Psi @ np.array([e.gain for e in filled])
    rel = np.abs(Psi.conj().T @ res).max() / (np.linalg.norm(r) * np.linalg.norm(Psi, 2))
    return rel < 1e-8, f"max |Psi^H r_res| relative = {rel:.1e}"


def check_assignment() -> tuple:
    rng = np.random.default_rng(4)
    sc = _ref_scenario(5)
    worst = 0.0
    for _ in range(20):
        est = [PathEstimate(q, p.delay + rng.normal(0, 0.7), p.doppler + rng.normal(0, 0.7))
               for q, ps in enumerate(sc.users) for p in ps]
        got = match_paths(sc, est).total_cost
        best = 0.0
        for q, paths in enumerate(sc.users):
            mine = [e for e in est if e.user == q]
            best += min(
                sum(pair_cost(p, mine[j], sc.dims.N, sc.dims.M) for p, j in zip(paths, perm))
                for perm in itertools.permutations(range(len(mine)))
            )
        worst = max(worst, got - best)
    return worst < 1e-9, f"max excess over exhaustive optimum = {worst:.1e}"


CHECKS = {
    "delay operator unitary": check_delay_unitary,
    "integer delay is a cyclic shift": check_integer_shift,
    "delay diagonal semigroup": check_semigroup,
    "ZC zero periodic autocorrelation": check_zc_autocorrelation,
    "steering vectors orthogonal to noise subspace": check_subspace_orthogonality,
    "LS gain residual orthogonal to dictionary": check_ls_residual,
    "assignment matches exhaustive search": check_assignment,
}


def run_all(out=print) -> bool:
    ok_all = True
    for name, fn in CHECKS.items():
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        ok_all &= bool(ok)
        out(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return ok_all
