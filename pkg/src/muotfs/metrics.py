"""Estimate-to-truth matching and RMSE bookkeeping."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import DDPath, SystemDims, channel_distance_sq
from .gains import PathEstimate
from .synthesis import Scenario


def wrap(x, period):
    """Map differences to (-period/2, period/2]."""
    return period / 2 - np.mod(period / 2 - np.asarray(x, dtype=float), period)


@dataclass
class MatchResult:
    """Pairs are ``(true_id, estimate_id, cost)``.

    True ids index ``scenario.all_paths()``; estimate ids index the estimate
    list passed to :func:`match_paths`.
    """

    pairs: list = field(default_factory=list)
    misses: list = field(default_factory=list)
    false_alarms: list = field(default_factory=list)

    @property
    def total_cost(self) -> float:
        return float(sum(c for _, _, c in self.pairs))


def pair_cost(true: DDPath, est: PathEstimate, N: int, M: int) -> float:
    return float(wrap(true.delay - est.delay, M) ** 2 + wrap(true.doppler - est.doppler, N) ** 2)


def match_paths(truth: Scenario, estimates: Sequence[PathEstimate]) -> MatchResult:
    """Per-user minimum-cost assignment between true and estimated paths."""
    dims = truth.dims
    result = MatchResult()
    offset = 0
    matched_est = set()
    for q, paths in enumerate(truth.users):
        est_ids = [i for i, e in enumerate(estimates) if e.user == q]
        if est_ids:
            C = np.array(
                [[pair_cost(p, estimates[j], dims.N, dims.M) for j in est_ids] for p in paths]
            )
            rows, cols = linear_sum_assignment(C)
        else:
            rows, cols = np.array([], int), np.array([], int)
        hit = set()
        for r, c in zip(rows, cols):
            result.pairs.append((offset + int(r), est_ids[c], float(C[r, c])))
            hit.add(int(r))
            matched_est.add(est_ids[c])
        result.misses += [offset + i for i in range(len(paths)) if i not in hit]
        offset += len(paths)
    result.false_alarms = [i for i in range(len(estimates)) if i not in matched_est]
    return result


@dataclass
class ErrorPool:
    """Running sums of squared errors; merging is order independent."""

    sq_delay: float = 0.0
    sq_doppler: float = 0.0
    sq_gain: float = 0.0
    pairs: int = 0
    sq_channel: float = 0.0
    trials: int = 0
    truths: int = 0
    misses: int = 0

    def add_trial(self, truth: Scenario, estimates: Sequence[PathEstimate], match: MatchResult,
                  channel_sq: float) -> None:
        paths = truth.all_paths()
        dims = truth.dims
        for t, e, _ in match.pairs:
            p, est = paths[t], estimates[e]
            self.sq_delay += float(wrap(p.delay - est.delay, dims.M) ** 2)
            self.sq_doppler += float(wrap(p.doppler - est.doppler, dims.N) ** 2)
            g = 0j if est.gain is None else est.gain
            self.sq_gain += abs(p.gain - g) ** 2
        self.pairs += len(match.pairs)
        self.sq_channel += channel_sq
        self.trials += 1
        self.truths += len(paths)
        self.misses += len(match.misses)

    def merge(self, other: "ErrorPool") -> "ErrorPool":
        return ErrorPool(*(a + b for a, b in zip(self.astuple(), other.astuple())))

    def astuple(self):
        return (self.sq_delay, self.sq_doppler, self.sq_gain, self.pairs, self.sq_channel,
                self.trials, self.truths, self.misses)

    def rmse_params(self):
        """Pooled ``(rmse_delay, rmse_doppler, rmse_gain)`` over matched pairs."""
        if self.pairs == 0:
            raise ValueError("no matched pairs to pool")
        return tuple(math.sqrt(s / self.pairs) for s in (self.sq_delay, self.sq_doppler, self.sq_gain))

    def rmse_channel(self) -> float:
        """Root of the mean per-trial ``||H - H_hat||_F^2 / (MN)`` (already normalized)."""
        return math.sqrt(self.sq_channel / self.trials) if self.trials else float("nan")

    @property
    def miss_rate(self) -> float:
        return self.misses / self.truths if self.truths else 0.0


def rmse_params(errors):
    """Pooled RMSE from ``(d_delay, d_doppler, d_gain)`` error triples."""
    errors = list(errors)
    if not errors:
        raise ValueError("no matched pairs to pool")
    arr = np.array([[abs(a) ** 2, abs(b) ** 2, abs(c) ** 2] for a, b, c in errors])
    return tuple(np.sqrt(arr.mean(axis=0)).tolist())


def rmse_channel(truth: Scenario, estimates: Sequence[PathEstimate], dims: SystemDims) -> float:
    """``sqrt(||H - H_hat||_F^2 / (MN))`` with ``H_hat`` built from the estimates."""
    est = [e.as_path() for e in estimates]
    return math.sqrt(channel_distance_sq(truth.all_paths(), est, dims) / dims.MN)
