"""Command-line entry point: ``muotfs {sweep,trial,complexity,selftest}``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

from .core import ConfigError
from .harness import (
    complexity_report,
    format_complexity,
    load_config,
    rows_to_csv,
    run_sweep,
    run_trial,
)

log = logging.getLogger("muotfs")

EXIT_CONFIG = 2


def _snr(text: str) -> float:
    if text.lower() in ("inf", "+inf"):
        return math.inf
    return float(text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="muotfs", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="Monte-Carlo RMSE versus pilot SNR (CSV)")
    sw.add_argument("--config", required=True)
    sw.add_argument("--out", required=True, help="CSV path, or - for stdout")
    sw.add_argument("--threads", type=int, default=1)
    sw.add_argument("--trials", type=int, help="override sweep.trials")

    tr = sub.add_parser("trial", help="single trial with full estimates (JSON)")
    tr.add_argument("--config", required=True)
    tr.add_argument("--snr", type=_snr, required=True, help="pilot SNR in dB (or inf)")
    tr.add_argument("--dump", required=True, help="JSON path, or - for stdout")
    tr.add_argument("--trial", type=int, default=0, help="trial index (selects the scenario)")

    cx = sub.add_parser("complexity", help="complex-multiplication counts per stage")
    cx.add_argument("--config", required=True)
    cx.add_argument("--ptot", type=int, default=12)
    cx.add_argument("--c-evd", type=float, default=1.0)
    cx.add_argument("--c-svd", type=float, default=1.0)
    cx.add_argument("--c-root", type=float, default=1.0)
    cx.add_argument("--json", action="store_true")

    sub.add_parser("selftest", help="run the numerical invariant checks")
    return ap


def _write(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")

    if args.command == "selftest":
        from .selfcheck import run_all

        return 0 if run_all() else 1

    try:
        cfg = load_config(args.config)
    except FileNotFoundError:
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "sweep":
        if args.trials is not None:
            from dataclasses import replace

            cfg = replace(cfg, trials=args.trials)
        if args.threads < 1:
            print("error: --threads must be >= 1", file=sys.stderr)
            return EXIT_CONFIG
        rows = run_sweep(cfg, threads=args.threads,
                         progress=lambda t: log.info("trial %d/%d", t + 1, cfg.trials))
        _write(args.out, rows_to_csv(rows))
        for r in rows:
            if r.failures:
                log.warning("%s at %g dB: %d failed trials", r.estimator, r.snr_db, r.failures)
        return 0

    if args.command == "trial":
        rep = run_trial(cfg, args.trial, args.snr)
        _write(args.dump, json.dumps(rep.to_dict(), indent=2) + "\n")
        return 0

    if args.command == "complexity":
        rep = complexity_report(cfg, args.ptot, args.c_evd, args.c_svd, args.c_root)
        print(json.dumps(rep, indent=2) if args.json else format_complexity(rep))
        return 0
    return 1  # unreachable with required subcommands


if __name__ == "__main__":
    sys.exit(main())
