#!/usr/bin/env python3
"""Average total power vs number of users; prints a small table and writes CSV."""
import argparse
import logging

from mpalloc.harness import ExperimentConfig, emit_results, load_config, run_power_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=None)
    ap.add_argument("--trials", type=int, default=None)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--out", default="power.csv")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    overrides = dict(trials=args.trials, seed=args.seed, workers=args.workers)
    if args.config:
        config = load_config(args.config, **overrides)
    else:
        config = ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})
    result = run_power_experiment(config)
    emit_results(result.rows, args.out)

    print(f"{'N':>4} " + " ".join(f"{a:>18}" for a in config.algorithms))
    for N in config.users:
        cells = []
        for a in config.algorithms:
            row = next(r for r in result.rows if r.N == N and r.algorithm == a)
            cells.append(f"{row.value:10.4f} ± {row.stderr:.4f}")
        print(f"{N:>4} " + " ".join(f"{c:>18}" for c in cells))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
