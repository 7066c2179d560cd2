"""Command-line interface.

Subcommands:
  solve   run the configured solver, writing rounds.csv, summary.json, and
          the report files into the output directory
  oracle  run the closed-form scan for the same config, writing oracle.json
  report  regenerate report.txt, gap_curve.csv, and lambda_trajectory.csv
          from a stored run directory

Exit codes: 0 success (including an infeasible oracle report), 2 config or
usage error, 3 solver non-convergence (artifacts are still written),
4 I/O failure while writing results.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from .exceptions import ConfigError, DivergenceError, NoiseAllocError
from .config import load_config
from .runner import emit_report, load_record, run_experiment, run_oracle

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_CONVERGENCE = 3
EXIT_IO = 4


def _add_common(sp: argparse.ArgumentParser):
    sp.add_argument("--config", required=True, help="path to an INI experiment config")
    sp.add_argument("--seed", type=int, default=None, help="override the config seed")
    sp.add_argument("--out", default=None, help="override the config output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noisealloc",
        description="Pick training noise-level distributions by dual ascent.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("solve", help="run the configured solver"))
    _add_common(sub.add_parser("oracle", help="run the closed-form grid-search oracle"))
    rp = sub.add_parser("report", help="re-emit report files from a stored run")
    rp.add_argument("--out", required=True, help="directory holding rounds.csv and summary.json")
    return parser


def _cmd_solve(args) -> int:
    config = load_config(args.config).override(seed=args.seed, output_dir=args.out)
    record, result = run_experiment(config)
    s = record.summary
    print(f"problem {s['problem']} on {s['backend']}: converged={s['converged']} "
          f"rounds={s['rounds_used']} overall_risk={s['overall_risk']:.6g} "
          f"max_gap={s['max_gap']:.6g}")
    if s["epsilon_min"] is not None:
        print(f"epsilon_min: final {s['epsilon_min']:.6g}, best {s['epsilon_min_best']:.6g}")
    print(f"artifacts written to {config.output_dir}")
    if not result.converged:
        print(f"advisory: {result.advisory}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def _cmd_oracle(args) -> int:
    config = load_config(args.config).override(seed=args.seed, output_dir=args.out)
    report = run_oracle(config)
    if report["feasible"]:
        print(f"oracle: sigma_bar_sq={report['sigma_bar_sq']:.6g} "
              f"overall_risk={report['overall_risk']:.6g} max_gap={report['max_gap']:.6g} "
              f"epsilon_min={report['epsilon_min']:.6g}")
    else:
        print(f"oracle: infeasible at epsilon={report['epsilon']:.6g} "
              f"(epsilon_min={report['epsilon_min']:.6g})")
    print(f"oracle report written to {config.output_dir}")
    return EXIT_OK


def _cmd_report(args) -> int:
    record = load_record(args.out)
    emit_report(record, args.out)
    print(f"report files written to {args.out}")
    return EXIT_OK


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "oracle":
            return _cmd_oracle(args)
        return _cmd_report(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"solver diverged: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except NoiseAllocError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
