"""Monte-Carlo SNR sweeps, single-trial dumps and the complexity report."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .core import ConfigError, SystemDims
from .gains import EstimationResult, ls_gains
from .metrics import ErrorPool, MatchResult, match_paths, rmse_channel
from .mp import MpConfig, run_mp
from .pilot import PilotConfig
from .synthesis import Scenario, ScenarioConstraints, add_noise, random_scenario, tf_pilot_response
from .wmusic import WMusicConfig, run_wmusic

ESTIMATORS = ("wmusic", "mp")
CSV_HEADER = ["snr_db", "estimator", "rmse_delay", "rmse_doppler", "rmse_gain",
              "rmse_channel", "miss_rate", "trials"]


@dataclass(frozen=True)
class SweepConfig:
    dims: SystemDims
    pilot: PilotConfig
    wmusic: WMusicConfig = field(default_factory=WMusicConfig)
    mp: MpConfig = field(default_factory=MpConfig)
    snr_points_db: tuple = (0.0, 10.0, 20.0, 30.0)
    trials: int = 100
    seed: int = 0
    min_doppler_sep: float = 0.3
    estimators: tuple = ESTIMATORS

    def validate(self) -> None:
        self.pilot.validate(self.dims)
        if self.pilot.user_roots is not None and len(set(self.pilot.user_roots)) > 1:
            raise ConfigError("estimators need one shared ZC root (user_roots differ)")
        if self.trials < 1:
            raise ConfigError(f"trials >= 1 violated (got {self.trials})")
        if not self.snr_points_db:
            raise ConfigError("snr_points_db must be nonempty")
        for name in self.estimators:
            if name not in ESTIMATORS:
                raise ConfigError(f"unknown estimator {name!r}")
        P_max = 3 * self.pilot.Q
        self.wmusic.validate(self.dims.M, self.dims.N, P_max)
        self.mp.validate(self.dims.M, self.dims.N, P_max)

    @property
    def constraints(self) -> ScenarioConstraints:
        return ScenarioConstraints(min_doppler_sep=self.min_doppler_sep)


def default_config(**overrides) -> SweepConfig:
    """The 32 x 64, four-user setup with the default estimator windows."""
    base = dict(dims=SystemDims(32, 64, 4, 6), pilot=PilotConfig(8, 4, 4, 1))
    base.update(overrides)
    return SweepConfig(**base)


def _float(x) -> float:
    if isinstance(x, str) and x.lower() in ("inf", "+inf", "infinity"):
        return math.inf
    return float(x)


def config_from_dict(d: dict) -> SweepConfig:
    """Build a :class:`SweepConfig` from the JSON config layout."""
    try:
        s, p = d["system"], d["pilot"]
        dims = SystemDims(int(s["M"]), int(s["N"]), float(s["ell_max"]), float(s["kappa_max"]))
        pilot = PilotConfig(int(p["M_ZC"]), int(p["M_CP"]), int(p["Q"]), int(p.get("zc_root", 1)))
        wm = WMusicConfig(**d.get("wmusic", {}))
        mp = MpConfig(**d.get("mp", {}))
        sw = dict(d.get("sweep", {}))
    except KeyError as exc:
        raise ConfigError(f"missing config key {exc}") from None
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    kwargs = {}
    if "snr_points_db" in sw:
        kwargs["snr_points_db"] = tuple(_float(x) for x in sw["snr_points_db"])
    for key, cast in (("trials", int), ("seed", int), ("min_doppler_sep", float)):
        if key in sw:
            kwargs[key] = cast(sw[key])
    if "estimators" in sw:
        kwargs["estimators"] = tuple(sw["estimators"])
    cfg = SweepConfig(dims, pilot, wm, mp, **kwargs)
    cfg.validate()
    return cfg


def config_to_dict(cfg: SweepConfig) -> dict:
    d, p = cfg.dims, cfg.pilot
    return {
        "system": {"M": d.M, "N": d.N, "ell_max": d.ell_max, "kappa_max": d.kappa_max},
        "pilot": {"M_ZC": p.M_ZC, "M_CP": p.M_CP, "zc_root": p.zc_root, "Q": p.Q},
        "wmusic": asdict(cfg.wmusic),
        "mp": asdict(cfg.mp),
        "sweep": {
            "snr_points_db": [x if math.isfinite(x) else "inf" for x in cfg.snr_points_db],
            "trials": cfg.trials,
            "seed": cfg.seed,
            "min_doppler_sep": cfg.min_doppler_sep,
            "estimators": list(cfg.estimators),
        },
    }


def load_config(path) -> SweepConfig:
    with open(path) as fh:
        try:
            return config_from_dict(json.load(fh))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None


# -- single trial -----------------------------------------------------------

def trial_scenario(cfg: SweepConfig, trial: int) -> Scenario:
    rng = np.random.default_rng([cfg.seed, trial])
    return random_scenario(cfg.dims, cfg.pilot, rng, cfg.constraints, seed=trial)


@dataclass
class EstimatorOutcome:
    result: EstimationResult
    match: MatchResult
    channel_sq: float
    error: Optional[str] = None


@dataclass
class TrialReport:
    trial: int
    snr_db: float
    scenario: Scenario
    outcomes: dict

    def to_dict(self) -> dict:
        out = {
            "trial": self.trial,
            "snr_db": self.snr_db if math.isfinite(self.snr_db) else "inf",
            "truth": self.scenario.to_dict(),
            "estimators": {},
        }
        for name, oc in self.outcomes.items():
            out["estimators"][name] = {
                "estimates": [
                    {"user": e.user, "delay": e.delay, "doppler": e.doppler,
                     "gain_re": (e.gain or 0j).real, "gain_im": (e.gain or 0j).imag}
                    for e in oc.result.estimates
                ],
                "unassigned_dopplers": oc.result.unassigned,
                "matches": [{"true": t, "estimate": e, "cost": c} for t, e, c in oc.match.pairs],
                "misses": oc.match.misses,
                "false_alarms": oc.match.false_alarms,
                "channel_rmse": math.sqrt(oc.channel_sq),
                "flags": oc.result.flags,
                "error": oc.error,
            }
        return out


def _estimate(name: str, obs, sc: Scenario, cfg: SweepConfig) -> EstimatorOutcome:
    dims, pilot = cfg.dims, cfg.pilot
    try:
        if name == "wmusic":
            res = run_wmusic(obs, pilot, cfg.wmusic, sc.P_tot, dims)
        else:
            res = run_mp(obs, pilot, cfg.mp, sc.P_tot, dims)
        res.estimates, ill = ls_gains(obs.grid, res.estimates, obs.spectrum, dims, pilot)
        if ill:
            res.flags = sorted(set(res.flags) | {"ill_posed_gains"})
        error = None
    except (np.linalg.LinAlgError, ValueError, FloatingPointError) as exc:
        res, error = EstimationResult([], [], ["estimator_failed"]), f"{type(exc).__name__}: {exc}"
    match = match_paths(sc, res.estimates)
    ch = rmse_channel(sc, res.estimates, dims) ** 2
    if not math.isfinite(ch):
        ch, res.flags = 0.0, res.flags + ["nonfinite_channel"]
    return EstimatorOutcome(res, match, ch, error)


def run_trial(cfg: SweepConfig, trial: int, snr_db: float, snr_index: int = 0) -> TrialReport:
    """One Monte-Carlo draw; the scenario depends on (seed, trial) only and the
    noise on (seed, trial, snr_index), so every SNR point sees the same channels."""
    sc = trial_scenario(cfg, trial)
    obs = add_noise(tf_pilot_response(sc), snr_db, np.random.default_rng([cfg.seed, trial, 1, snr_index]))
    outcomes = {name: _estimate(name, obs, sc, cfg) for name in cfg.estimators}
    return TrialReport(trial, snr_db, sc, outcomes)


# -- sweep --------------------------------------------------------------------

@dataclass
class SweepRow:
    snr_db: float
    estimator: str
    rmse_delay: float
    rmse_doppler: float
    rmse_gain: float
    rmse_channel: float
    miss_rate: float
    trials: int
    failures: int = 0


def _trial_pools(cfg: SweepConfig, trial: int) -> list:
    pools = []
    for k, snr in enumerate(cfg.snr_points_db):
        rep = run_trial(cfg, trial, snr, k)
        row = {}
        for name, oc in rep.outcomes.items():
            pool = ErrorPool()
            pool.add_trial(rep.scenario, oc.result.estimates, oc.match, oc.channel_sq)
            row[name] = (pool, oc.error is not None)
        pools.append(row)
    return pools


def run_sweep(cfg: SweepConfig, threads: int = 1, progress=None) -> list:
    """Pooled RMSE per (SNR, estimator). Results do not depend on ``threads``."""
    cfg.validate()
    trials = range(cfg.trials)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            per_trial = list(ex.map(lambda t: _trial_pools(cfg, t), trials))
    else:
        per_trial = []
        for t in trials:
            per_trial.append(_trial_pools(cfg, t))
            if progress:
                progress(t)
    rows = []
    for k, snr in enumerate(cfg.snr_points_db):
        for name in cfg.estimators:
            pool, failures = ErrorPool(), 0
            # summation in trial order keeps floating-point results identical
            for tp in per_trial:
                p, failed = tp[k][name]
                pool = pool.merge(p)
                failures += failed
            if pool.pairs:
                rd, rk, rg = pool.rmse_params()
            else:
                rd = rk = rg = float("nan")
            rows.append(SweepRow(snr, name, rd, rk, rg, pool.rmse_channel(), pool.miss_rate,
                                 pool.trials, failures))
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([
            "inf" if math.isinf(r.snr_db) else f"{r.snr_db:g}",
            r.estimator,
            *(f"{v:.6e}" for v in (r.rmse_delay, r.rmse_doppler, r.rmse_gain, r.rmse_channel)),
            f"{r.miss_rate:.6f}",
            r.trials,
        ])
    return buf.getvalue()


# -- complexity -------------------------------------------------------------

def complexity_report(cfg: SweepConfig, P_tot: int, c_evd: float = 1.0, c_svd: float = 1.0,
                      c_root: float = 1.0) -> dict:
    """Closed-form complex-multiplication counts per processing stage.

    Returns ``{"wmusic": {...}, "mp": {...}, "totals": {...}}`` with stages in
    processing order.
    """
    M, N = cfg.dims.M, cfg.dims.N
    w, m = cfg.wmusic, cfg.mp
    MsNs = w.M_sub * w.N_sub
    L_snap = N - w.N_sub + 1
    n_coef = 2 * w.G + 1
    wm = {
        "C_cov": L_snap * MsNs ** 2,
        "C_EVD": c_evd * MsNs ** 3,
        "C_spec": w.Q_sample * w.M_sub * MsNs ** 2,
        "C_WLS": w.Q_sample * n_coef ** 2 + n_coef ** 3,
        "C_root": c_root * w.G ** 3,
        "C_delay": P_tot * w.M_sub * MsNs ** 2,
    }
    K_M, K_N = m.K(M, N)
    rows = m.M_pencil * m.N_pencil
    cols_l = K_M * (K_N - 1)
    mpc = {
        "C_Hankel": rows * K_M * K_N,
        "C_SVD": c_svd * (rows * cols_l ** 2 + cols_l ** 3),
        # U_s^H X_r, then (.) V_s
        "C_T": P_tot * rows * cols_l + P_tot ** 2 * cols_l,
        "C_EVD": c_evd * P_tot ** 3,
        "C_proj": M * N * P_tot + N * P_tot ** 2 + P_tot ** 3,
    }
    tw, tm = float(sum(wm.values())), float(sum(mpc.values()))
    return {
        "wmusic": {k: float(v) for k, v in wm.items()},
        "mp": {k: float(v) for k, v in mpc.items()},
        "totals": {"wmusic": tw, "mp": tm, "ratio": tw / tm},
    }


def format_complexity(report: dict) -> str:
    lines = ["stage        MU-W-MUSIC      | stage        MU-MP"]
    wm, mp = list(report["wmusic"].items()), list(report["mp"].items())
    mp_rows = [mp[0], mp[1], ("---", None), mp[2], mp[3], mp[4]]
    for (kw, vw), (km, vm) in zip(wm, mp_rows):
        right = "---" if vm is None else f"{vm:.3e}"
        lines.append(f"{kw:<12} {vw:.3e}       | {km:<12} {right}")
    t = report["totals"]
    lines.append(f"{'total':<12} {t['wmusic']:.3e}       | {'total':<12} {t['mp']:.3e}")
    lines.append(f"ratio W-MUSIC / MP = {t['ratio']:.2f}")
    return "\n".join(lines)
