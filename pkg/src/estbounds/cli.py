"""Command-line entry point.

    estbounds --config run.json [--out PATH] [--format csv|json] [--seed N] [--r R] [--quiet]
    estbounds fig1                      # built-in defaults, CSV on stdout

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

from .config import COMMANDS, ConfigError, RunConfig, load_config, parse_config
from .errors import BoundsError, NumericalError
from . import runs

log = logging.getLogger("estbounds")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ";".join(_csv_cell(v) for v in value)
    return str(value)


def _json_value(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    return value


def render(rows: list[dict] | dict, columns, fmt: str) -> str:
    """Serialize rows with a fixed column order; a single dict renders as one record."""
    single = isinstance(rows, dict)
    records = [rows] if single else rows
    if fmt == "json":
        data = [{c: _json_value(r.get(c)) for c in columns} for r in records]
        return json.dumps(data[0] if single else data, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in records:
        writer.writerow([_csv_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def execute(config: RunConfig) -> dict[str, str]:
    """Run the configured command; returns {destination: text} (``None`` key = primary output)."""
    outputs: dict = {}
    cmd = config.command
    if cmd == "fig1":
        outputs[None] = render(runs.run_fig1(config), runs.FIG12_COLUMNS, config.format)
    elif cmd == "fig2":
        outputs[None] = render(runs.run_fig2(config), runs.FIG12_COLUMNS, config.format)
    elif cmd == "fig3":
        rows, samples = runs.run_fig3(config)
        outputs[None] = render(rows, runs.FIG3_COLUMNS, config.format)
        if config.samples_output:
            outputs[config.samples_output] = render(samples, runs.SAMPLE_COLUMNS, "csv")
    elif cmd == "bound":
        outputs[None] = render(runs.run_bound(config), runs.BOUND_COLUMNS, config.format)
    else:
        outputs[None] = render(runs.run_quantum_check(config), runs.QUANTUM_COLUMNS, config.format)
    return outputs


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="estbounds",
        description="Variance lower bounds (Barankin, HCR, CRB, extended CRB) and figure data.",
    )
    parser.add_argument("command", nargs="?", choices=COMMANDS,
                        help="command to run with built-in defaults (or to check against --config)")
    parser.add_argument("--config", metavar="PATH", help="JSON run configuration")
    parser.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    parser.add_argument("--format", choices=("csv", "json"))
    parser.add_argument("--seed", type=int)
    parser.add_argument("--r", type=float, help="Bloch-vector length for qubit models")
    parser.add_argument("--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    overrides = {"format": args.format, "seed": args.seed, "r": args.r, "output": args.out}
    try:
        if args.config:
            config = load_config(args.config, overrides)
            if args.command and args.command != config.command:
                raise ConfigError(f"command {args.command!r} conflicts with config command {config.command!r}")
        elif args.command:
            config = parse_config(json.dumps({"command": args.command}), overrides)
        else:
            raise ConfigError("give a command or --config")
        outputs = execute(config)
    except ConfigError as exc:
        print(f"estbounds: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BoundsError as exc:
        print(f"estbounds: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"estbounds: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    for dest, text in outputs.items():
        target = dest if dest is not None else config.output
        if target:
            Path(target).write_text(text)
            log.info("wrote %s", target)
        else:
            sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
