"""Multiuser OTFS delay-Doppler channel estimation with MU-PCP pilots.

Two estimators share one observation model: a weighted-MUSIC variant
(:func:`run_wmusic`) and a matrix-pencil variant (:func:`run_mp`). Gains
follow from :func:`ls_gains`; :mod:`muotfs.harness` runs sweeps.
"""

from .core import (
    ConfigError,
    DDPath,
    SystemDims,
    channel_distance_sq,
    channel_matrix,
    delay_operator,
    doppler_operator,
)
from .gains import EstimationResult, PathEstimate, dictionary, ls_gains
from .harness import (
    SweepConfig,
    complexity_report,
    load_config,
    default_config,
    run_sweep,
    run_trial,
)
from .metrics import ErrorPool, MatchResult, match_paths
from .mp import MpConfig, run_mp
from .pilot import PilotConfig, associate_users, capacity_check, pcp_grid, pilot_spectrum, zc_sequence
from .synthesis import Scenario, TFPilotGrid, add_noise, random_scenario, tf_pilot_response
from .wmusic import WMusicConfig, run_wmusic

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DDPath", "SystemDims", "channel_distance_sq", "channel_matrix",
    "delay_operator", "doppler_operator", "EstimationResult", "PathEstimate", "dictionary",
    "ls_gains", "SweepConfig", "complexity_report", "load_config", "default_config", "run_sweep",
    "run_trial", "ErrorPool", "MatchResult", "match_paths", "MpConfig", "run_mp", "PilotConfig",
    "associate_users", "capacity_check", "pcp_grid", "pilot_spectrum", "zc_sequence", "Scenario",
    "TFPilotGrid", "add_noise", "random_scenario", "tf_pilot_response", "WMusicConfig",
    "run_wmusic",
]
