"""Command-line interface.

Exit codes: 0 success, 1 invariant or identity check failure, 2 input or
schema error, 3 group-identifiability (rank) failure.
"""

import argparse
import json
import sys
from pathlib import Path

from .errors import (
    DimensionError,
    DivergenceError,
    MissingGroupError,
    NumericError,
    SchemaError,
    SplitError,
)
from .harness import (
    Assumption1Violation,
    CheckFailure,
    cmd_check,
    cmd_fit_eval,
    cmd_gen_synthetic,
    cmd_histograms,
    cmd_tradeoff,
    parse_config,
    set_override,
)

INPUT_ERRORS = (
    SchemaError,
    DimensionError,
    MissingGroupError,
    SplitError,
    ValueError,
    KeyError,
    TypeError,
    OSError,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="meanparity",
        description="Kernel regression with mean-parity fairness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "fit-eval": "fit the configured methods and write metrics.csv + report.json",
        "tradeoff": "sweep the fairness-accuracy interpolation and write tradeoff.csv",
        "histograms": "export per-group histograms of targets and fair predictions",
        "check": "run the invariant suite on the configured instance",
        "gen-synthetic": "generate a synthetic dataset and write it as CSV",
    }
    for name, help_text in commands.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, help="JSON config file")
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            dest="overrides",
            help="override a config field (dotted keys, JSON values)",
        )
        p.add_argument("--out-dir", type=Path, help="output directory")
        p.add_argument("--seed", type=int, help="master seed")
        if name == "histograms":
            p.add_argument("--bins", type=int, default=30, help="histogram bin count")
    return parser


def _load_doc(args) -> dict:
    doc = {}
    if args.config is not None:
        with open(args.config) as fh:
            doc = json.load(fh)
        if not isinstance(doc, dict):
            raise SchemaError("config file must hold a JSON object")
    for assignment in args.overrides:
        set_override(doc, assignment)
    if args.out_dir is not None:
        doc["out_dir"] = str(args.out_dir)
    if args.seed is not None:
        doc["seed"] = args.seed
    return doc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = parse_config(_load_doc(args))
        if args.command == "fit-eval":
            cmd_fit_eval(config)
        elif args.command == "tradeoff":
            cmd_tradeoff(config)
        elif args.command == "histograms":
            cmd_histograms(config, bins=args.bins)
        elif args.command == "check":
            cmd_check(config)
        elif args.command == "gen-synthetic":
            path = cmd_gen_synthetic(config)
            print(path)
    except Assumption1Violation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (CheckFailure, NumericError, DivergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
        return 2
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
