#!/usr/bin/env python3
"""Outage probability vs P_max for each N; prints one curve per algorithm and writes CSV."""
import argparse
import logging

from mpalloc.harness import ExperimentConfig, emit_results, load_config, run_outage_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=None)
    ap.add_argument("--users", default="2,16", help="comma separated user counts")
    ap.add_argument("--trials", type=int, default=None)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--points", type=int, default=8, help="number of P_max values")
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--out", default="outage.csv")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    overrides = dict(trials=args.trials, seed=args.seed, workers=args.workers)
    if args.config:
        config = load_config(args.config, **overrides)
    else:
        config = ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})
    users = tuple(int(u) for u in args.users.split(","))
    sizes = dict(zip(config.users, config.candidate_sizes))
    config = config.replace(
        users=users,
        candidate_sizes=tuple(sizes.get(u, config.candidate_sizes[-1]) for u in users),
        pmax_points=args.points,
    )
    result = run_outage_experiment(config)
    emit_results(result.rows, args.out)

    for N in config.users:
        print(f"N = {N}")
        pmaxes = sorted({r.param for r in result.rows if r.N == N})
        print("  P_max   " + " ".join(f"{p:8.3g}" for p in pmaxes))
        for a in config.algorithms:
            curve = [r.value for r in result.rows if r.N == N and r.algorithm == a]
            print(f"  {a:<7} " + " ".join(f"{v:8.3f}" for v in curve))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
