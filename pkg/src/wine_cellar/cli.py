"""Command-line entry point.

Subcommands: linkbudget, layout, sweep-irs, coordinate, simulate, report.
Exit codes: 0 success, 2 configuration error, 3 infeasible geometry,
4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional

from . import harness
from .config import load_config
from .errors import ConfigurationError, InfeasibleGeometryError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GEOMETRY = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wine-cellar",
        description="Digital-twin simulator for wireless-augmented HPC interconnects",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("linkbudget", "print the reference link-budget table"),
        ("layout", "dump rack/transceiver/panel positions"),
        ("sweep-irs", "sweep reflector spacing and room height"),
        ("coordinate", "plan and assign wireless links"),
        ("simulate", "run the coordination sweep with workload metrics"),
        ("report", "re-emit a previously saved JSON report"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", help="scenario config JSON file")
        cmd.add_argument("--seed", type=int, help="override the config seed")
        cmd.add_argument("--out", help="output directory (default: print CSV)")
        cmd.add_argument(
            "--format", choices=("csv", "json"), default="csv", help="output format"
        )
        if name == "report":
            cmd.add_argument(
                "--in", dest="input", required=True, help="saved JSON report"
            )
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config = config.with_seed(args.seed)

        if args.command == "linkbudget":
            report = harness.run_linkbudget_table(config)
        elif args.command == "layout":
            report = harness.layout_rows(config)
        elif args.command == "sweep-irs":
            report = harness.run_irs_sweep(config)
        elif args.command == "coordinate":
            report = harness.run_coordinate(config)
        elif args.command == "simulate":
            report = harness.run_coordination_sweep(config)
        else:  # report
            report = harness.load_report(args.input)
            recorded = report.metadata.get("config_digest")
            if recorded != config.digest():
                raise ConfigurationError(
                    f"report digest {recorded} does not match config digest "
                    f"{config.digest()}; refusing to re-emit"
                )

        if args.out:
            paths = harness.emit_report(report, args.format, args.out)
            for path in paths:
                print(path)
        else:
            payload = (
                harness.render_csv(report)
                if args.format == "csv"
                else harness.render_json(report)
            )
            sys.stdout.write(payload)
        return EXIT_OK
    except InfeasibleGeometryError as exc:
        print(f"infeasible geometry: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
