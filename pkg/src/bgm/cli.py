"""Command-line entry point: `bgm <task> --config <path>`.

The config file is the experiment; flags only pick the file, the output
directory, and optional seed overrides.  Exit codes: 0 on success, 1 for
configuration or parse problems, 2 when every seed failed at runtime.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import InvalidInputError, ParseError
from .experiment import TASKS, ExperimentConfig, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bgm",
        description="Boosted generative models: config-driven experiments.",
    )
    parser.add_argument("task", choices=TASKS, help="experiment task to run")
    parser.add_argument("--config", required=True, help="path to the JSON config")
    parser.add_argument("--out", default=None, help="output directory override")
    parser.add_argument(
        "--seeds",
        default=None,
        help="comma-separated seed list overriding the config",
    )
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="log progress to stderr"
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        with open(args.config, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"bgm: cannot read config: {exc}", file=sys.stderr)
        return 1

    seeds = None
    if args.seeds is not None:
        try:
            seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
        except ValueError:
            print(f"bgm: bad --seeds value {args.seeds!r}", file=sys.stderr)
            return 1

    try:
        cfg = ExperimentConfig.from_dict(
            doc, task=args.task, out_dir=args.out, seeds=seeds
        )
    except (InvalidInputError, ParseError) as exc:
        print(f"bgm: configuration error: {exc}", file=sys.stderr)
        return 1

    record = run_experiment(cfg)
    failed = [e for e in record.per_seed if e["status"] != "ok"]
    for entry in failed:
        print(
            f"bgm: seed {entry['seed']} failed: {entry['error']}", file=sys.stderr
        )
    if len(failed) == len(record.per_seed):
        return 2
    print(f"bgm: wrote {cfg.out_dir}/metrics.json ({cfg.task})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
