"""Command-line entry point.

``relaymatch simulate`` runs one policy's Monte Carlo experiment and writes a
per-period CSV plus a run manifest; ``relaymatch verify`` runs one of the
oracle suites. Exit codes: 0 success, 2 configuration error, 3 verification
failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys as _sys
from pathlib import Path

from . import __version__
from .config_io import apply_overrides, load_config
from .errors import ConfigurationError
from .harness import POLICIES, run_experiment
from .verification import SUITES

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERIFY = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relaymatch",
        description="Simulate learned CU / D2D-relay pairing and verify its oracles.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one policy's experiment from a config file")
    sim.add_argument("--config", required=True, help="path to the INI config file")
    sim.add_argument("--out", required=True, help="output directory (created if missing)")
    sim.add_argument("--policy", choices=POLICIES, help="override the config's policy")
    sim.add_argument("--seed", type=int, help="override the config's seed")
    sim.add_argument("--replications", type=int, help="override the replication count")
    sim.add_argument("--periods", type=int, help="override the horizon")

    ver = sub.add_parser("verify", help="run an oracle suite and exit nonzero on failure")
    ver.add_argument("--suite", required=True, choices=sorted(SUITES))
    return parser


def _simulate(args) -> int:
    config = load_config(args.config)
    config = apply_overrides(
        config,
        policy=args.policy,
        seed=args.seed,
        replications=args.replications,
        periods=args.periods,
    )
    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc
    results = run_experiment(config, out_dir=out_dir)
    print(f"wrote {out_dir / (config.policy + '.csv')}")
    print(
        f"final-window mean throughput {results.window_mean_throughput:.6g} nats/use, "
        f"stable fraction {results.window_sm_fraction:.3f}"
    )
    return EXIT_OK


def _verify(args) -> int:
    report = SUITES[args.suite]()
    for line in report.lines:
        print(f"{report.name}: {line}")
    print(f"{report.name}: {'PASS' if report.passed else 'FAIL'} ({report.duration:.2f}s)")
    return EXIT_OK if report.passed else EXIT_VERIFY


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return _simulate(args)
        return _verify(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=_sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=_sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
