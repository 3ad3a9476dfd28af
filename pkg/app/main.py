"""
Command-line entry point

    revlab <command> <action> [options]

Exit status: 0 success/accept, 1 reject/not found/mismatch, 2 error.
"""

import argparse
import asyncio
import logging
import sys
from typing import Any, Dict, List, Optional

from app.core.config import VERSION, settings
from app.core.errors import RevLabError
from app.core.logging import setup_logging
from app.schemas.experiment import EXPERIMENTS
from app.services.experiment import build_config, emit_report, load_config_file, run_experiment

logger = logging.getLogger(__name__)

# Flags shared by every subcommand: (name, type, help)
_OPTIONS = [
    ("--k", int, "Bennett branching factor"),
    ("--n", int, "Bennett recursion depth"),
    ("--t", int, "Chain length"),
    ("--budget", int, "Pebble budget limit for the search"),
    ("--seg-len", int, "Machine steps per segment"),
    ("--machine", str, "step-rule | oracle | rom"),
    ("--width", int, "Configuration / node width S in bits"),
    ("--time-bound", int, "Time bound T (defaults to t*S)"),
    ("--width-cap", int, "Euler tour configuration size cap"),
    ("--step-cap", int, "Euler tour step cap"),
    ("--depth", int, "Binary-tree depth for the Euler tour family"),
    ("--halt-fraction", float, "Share of halting configurations in random tables"),
    ("--tau", str, "Comma-separated instants to analyze"),
    ("--samples", int, "Instants sampled when --tau is not given"),
    ("--direction", str, "forward | backward (default: majority)"),
    ("--length", int, "String length for the incompressible search"),
    ("--system", str, "duplicate | zero | identity | combined"),
    ("--description", str, "Description file for analyze decompress"),
    ("--k-values", str, "Comma-separated k values for the sweep"),
    ("--n-values", str, "Comma-separated n values for the sweep"),
    ("--t-values", str, "Comma-separated chain lengths for the space report"),
    ("--depths", str, "Comma-separated binary-tree depths for the euler family"),
    ("--seed", int, "Base seed (trial i uses seed + i)"),
    ("--repetitions", int, "Number of seeded trials"),
    ("--output", str, "CSV report path (default: stdout)"),
    ("--save", str, "Write the schedule, trace, chain, ROM, description or machine file here"),
]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="revlab",
        description=f"{settings.PROJECT_NAME}: pebble games, reversible simulation and oracle separations",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    commands = parser.add_subparsers(dest="command", required=True)

    for command, actions in EXPERIMENTS.items():
        command_parser = commands.add_parser(command, help=f"{command} experiments")
        action_parsers = command_parser.add_subparsers(dest="action", required=True)
        for action in actions:
            sub = action_parsers.add_parser(action)
            sub.add_argument("--config", help="key=value file with defaults for any flag")
            sub.add_argument(
                "--report-sizes",
                action="store_true",
                default=None,
                help="Emit one CSV row per description component",
            )
            sub.add_argument("--verbose", action="store_true", help="Enable verbose logging")
            for flag, kind, help_text in _OPTIONS:
                sub.add_argument(flag, type=kind, default=None, help=help_text)
    return parser


def collect_values(args: argparse.Namespace) -> Dict[str, Any]:
    """Config file values overridden by flags given on the command line"""
    values: Dict[str, Any] = {}
    if args.config:
        values.update(load_config_file(args.config))
    for key, value in vars(args).items():
        if key in ("config", "verbose") or value is None:
            continue
        values[key] = value
    return values


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    setup_logging(level="DEBUG" if args.verbose else settings.LOG_LEVEL)

    try:
        config = build_config(collect_values(args))
        rows = asyncio.run(run_experiment(config))
        text = emit_report(rows, "csv", config.output)
    except (RevLabError, ValueError) as e:
        logger.error(f"{args.command} {args.action} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2

    if config.output is None:
        sys.stdout.write(text)
    return 1 if any(row.negative for row in rows) else 0


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
