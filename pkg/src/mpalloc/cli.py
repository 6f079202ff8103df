"""Command line driver: ``mpalloc power|outage [options]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .harness import (
    ExperimentConfig,
    emit_results,
    load_config,
    make_instance,
    run_algorithm,
    run_outage_experiment,
    run_power_experiment,
    write_results,
)
from .problem import ConfigurationError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mpalloc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("power", "average total power versus number of users"),
        ("outage", "outage probability versus maximum transmit power"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat key = value file mirroring ExperimentConfig")
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "jsonl"))
        p.add_argument("--algorithms", help="comma separated subset of mp,brcg,lp")
        p.add_argument("--users", help="comma separated user counts, e.g. 2,16")
        p.add_argument("--trace", help="write per-round MP messages of one trial as JSON lines")
        p.add_argument("--workers", type=int)
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _config_from(args) -> ExperimentConfig:
    overrides = dict(
        seed=args.seed,
        trials=args.trials,
        output=args.out,
        format=args.format,
        workers=args.workers,
    )
    if args.algorithms:
        overrides["algorithms"] = tuple(a.strip() for a in args.algorithms.split(",") if a.strip())
    if args.config:
        config = load_config(args.config, **overrides)
    else:
        config = ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})
    if args.users:
        users = tuple(int(u) for u in args.users.split(","))
        sizes = dict(zip(config.users, config.candidate_sizes))
        default = config.candidate_sizes[-1] if config.candidate_sizes else 24
        config = config.replace(users=users, candidate_sizes=tuple(sizes.get(u, default) for u in users))
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        config = _config_from(args)
        trace_fh = open(args.trace, "w") if args.trace else None
        try:
            if args.command == "power":
                trace = (lambda rec: trace_fh.write(json.dumps(rec) + "\n")) if trace_fh else None
                result = run_power_experiment(config, trace=trace)
            else:
                if trace_fh:
                    N, P = config.users[0], config.candidate_sizes[0]
                    run_algorithm("mp", make_instance(config, N, 0), config, P,
                                  trace=lambda rec: trace_fh.write(json.dumps(rec) + "\n"))
                result = run_outage_experiment(config)
        finally:
            if trace_fh:
                trace_fh.close()
        if config.output:
            emit_results(result.rows, config.output, config.format)
        else:
            write_results(result.rows, sys.stdout, config.format)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
