"""Command-line entry point: simulate, backtest, compare.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError, DataError, SeqbetError, UsageError
from .experiments import (
    parse_config,
    render_compare,
    render_table,
    run_backtest,
    run_compare,
    run_simulate,
)


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the CLI contract wants 1.
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="seqbet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, text in (
        ("simulate", "run strategies on generated series"),
        ("backtest", "run strategies on a price file"),
    ):
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", required=True, help="declarative experiment file")
        cmd.add_argument("--out", required=True, help="output directory for artifacts")
        cmd.add_argument("--seed", type=int, default=None, help="override the config seed")
        cmd.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    cmd = sub.add_parser("compare", help="merge summary tables of finished runs")
    cmd.add_argument("dirs", nargs="+", help="run directories to merge")
    cmd.add_argument("--out", default=None, help="write the merged table as CSV here")
    return parser


def _run(args) -> int:
    if args.command in ("simulate", "backtest"):
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        config = parse_config(args.config, seed_override=args.seed)
        if config.mode != args.command:
            raise ConfigError(
                f"config declares mode '{config.mode}' but the command is '{args.command}'"
            )
        runner = run_simulate if args.command == "simulate" else run_backtest
        report = runner(config, args.out, jobs=args.jobs)
        sys.stdout.write(render_table(report.cells, report.checkpoints))
        sys.stdout.write(
            f"# wrote {report.out_dir}  ({report.total_seconds:.1f}s strategy time)\n"
        )
        return 0
    rows = run_compare(args.dirs, out_path=args.out)
    manifest = json.loads((Path(args.dirs[0]) / "manifest.json").read_text(encoding="utf-8"))
    sys.stdout.write(render_compare(rows, list(manifest["checkpoints"])))
    return 0


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        return _run(args)
    except (ConfigError, UsageError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SeqbetError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
