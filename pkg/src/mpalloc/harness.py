"""Monte-Carlo experiments: average total power vs N, outage probability vs P_max.

Trial ``t`` at ``N`` users always draws the same channel realization for
every algorithm and every P_max value (common random numbers).
"""
from __future__ import annotations

import configparser
import csv
import dataclasses
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .baselines import brcg_allocate, fixed_format_assign
from .channel import ChannelParams, generate_instance
from .mp import MPConfig, run_mp
from .problem import ConfigurationError, FormatSet, ProblemInstance, feasibility_violations

log = logging.getLogger(__name__)

ALGORITHMS = ("mp", "brcg", "lp")
CSV_HEADER = ("experiment", "N", "algorithm", "param", "value", "stderr", "trials", "seed")


@dataclass
class ExperimentConfig:
    channel: ChannelParams = field(default_factory=ChannelParams)
    users: tuple = (2, 4, 8, 16)
    candidate_sizes: tuple = (24, 24, 24, 24)
    num_formats: int = 4
    eta_step: float = 1.0
    eta_avg: float = 1.0
    trials: int = 500
    inner_iterations: int = 100
    max_outer_cycles: int = 10
    damping: float = 0.0
    power_resolution: int = 1000
    # empty: calibrate from an uncapped run, see calibrate_pmax_sweep
    pmax_sweep: tuple = ()
    pmax_points: int = 6
    seed: int = 0
    algorithms: tuple = ALGORITHMS
    output: str | None = None
    format: str = "csv"
    workers: int = 1

    def __post_init__(self):
        self.users = tuple(int(n) for n in self.users)
        self.candidate_sizes = tuple(int(p) for p in self.candidate_sizes)
        self.pmax_sweep = tuple(float(p) for p in self.pmax_sweep)
        self.algorithms = tuple(self.algorithms)
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if len(self.users) != len(self.candidate_sizes):
            raise ConfigurationError("users and candidate_sizes must have the same length")
        if any(n < 1 for n in self.users):
            raise ConfigurationError("user counts must be >= 1")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown or not self.algorithms:
            raise ConfigurationError(f"unknown algorithms {sorted(unknown)}")
        if self.format not in ("csv", "jsonl"):
            raise ConfigurationError(f"unknown output format {self.format!r}")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")

    @property
    def format_set(self) -> FormatSet:
        return FormatSet(self.num_formats, self.eta_step)

    def mp_config(self, candidate_size: int) -> MPConfig:
        return MPConfig(
            inner_iterations=self.inner_iterations,
            max_outer_cycles=self.max_outer_cycles,
            candidate_size=candidate_size,
            damping=self.damping,
            power_resolution=self.power_resolution,
        )

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class TrialRecord:
    seed: int
    N: int
    algorithm: str
    total_power: float
    outage: tuple
    wall_time: float
    trial: int = 0
    pmax: float = math.inf

    @property
    def any_outage(self) -> bool:
        return any(self.outage)


@dataclass
class ResultRow:
    experiment: str
    N: int
    algorithm: str
    param: float
    value: float
    stderr: float
    trials: int
    seed: int


@dataclass
class ExperimentResult:
    rows: list
    records: list


# --- config file ---

_CHANNEL_FIELDS = {f.name for f in dataclasses.fields(ChannelParams)}
_TUPLE_FIELDS = {"users", "candidate_sizes", "pmax_sweep", "algorithms"}


def _parse_value(name: str, raw: str, template):
    raw = raw.strip()
    if name in _TUPLE_FIELDS:
        items = [s.strip() for s in raw.replace(";", ",").split(",") if s.strip()]
        if name == "algorithms":
            return tuple(items)
        cast = float if name == "pmax_sweep" else int
        return tuple(cast(s) for s in items)
    if raw.lower() in ("none", "") and name == "output":
        return None
    if isinstance(template, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(template, int):
        return int(raw)
    if isinstance(template, float):
        return float(raw)
    return raw


def load_config(path: str | Path, **overrides) -> ExperimentConfig:
    """Read a flat ``key = value`` file; channel keys and experiment keys share one namespace."""
    text = Path(path).read_text()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.read_string("[experiment]\n" + text)
    section = parser["experiment"]
    defaults = ExperimentConfig()
    channel_kwargs, kwargs = {}, {}
    for key, raw in section.items():
        if key in _CHANNEL_FIELDS:
            channel_kwargs[key] = _parse_value(key, raw, getattr(defaults.channel, key))
        elif key in {f.name for f in dataclasses.fields(ExperimentConfig)} and key != "channel":
            kwargs[key] = _parse_value(key, raw, getattr(defaults, key))
        else:
            raise ConfigurationError(f"unknown config key {key!r} in {path}")
    kwargs["channel"] = ChannelParams(**channel_kwargs)
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**kwargs)


# --- trials ---


def trial_seed(seed: int, N: int, trial: int) -> int:
    """Channel seed of trial ``trial`` at ``N`` users; shared by all algorithms."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(N), int(trial)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_instance(config: ExperimentConfig, N: int, trial: int, pmax: float = math.inf) -> ProblemInstance:
    demand = config.channel.bandwidth_hz * config.eta_avg / N
    return generate_instance(
        config.channel,
        N,
        config.format_set,
        np.full(N, demand),
        np.full(N, pmax),
        trial_seed(config.seed, N, trial),
    )


def run_algorithm(name: str, instance: ProblemInstance, config: ExperimentConfig, candidate_size: int, trace=None):
    """Returns ``(total_power, per-user outage flags, per-user power)``."""
    if name == "mp":
        res = run_mp(instance, config.mp_config(candidate_size), trace=trace)
        broken = feasibility_violations(instance, res.allocation, ~res.outage)
        if broken:
            raise RuntimeError("MP returned an infeasible allocation: " + "; ".join(broken))
        return res.total_power, tuple(bool(o) for o in res.outage), res.user_power
    if name == "brcg":
        res = brcg_allocate(instance)
    elif name == "lp":
        res = fixed_format_assign(instance, config.eta_avg)
    else:
        raise ConfigurationError(f"unknown algorithm {name!r}")
    return res.total_power, tuple(bool(o) for o in res.outage), res.user_power


def _power_trial(args):
    config, N, P, trial = args
    inst = make_instance(config, N, trial)
    out = []
    for alg in config.algorithms:
        t0 = time.perf_counter()
        power, outage, user_power = run_algorithm(alg, inst, config, P)
        rec = TrialRecord(trial_seed(config.seed, N, trial), N, alg, power, outage, time.perf_counter() - t0, trial)
        out.append((rec, user_power))
    return out


def _map_trials(fn, jobs, workers: int):
    # results are consumed in job order either way, so output is reproducible
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs, chunksize=4))
    return [fn(j) for j in jobs]


def _mean_se(values: Sequence[float]):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return math.nan, math.nan
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    return mean, se


def _power_rows(config: ExperimentConfig, records: list) -> list:
    rows = []
    for N in config.users:
        for alg in config.algorithms:
            ok = [r.total_power for r in records if r.N == N and r.algorithm == alg and not r.any_outage]
            mean, se = _mean_se(ok)
            rows.append(ResultRow("power", N, alg, math.inf, mean, se, len(ok), config.seed))
    return rows


def run_power_experiment(config: ExperimentConfig, trace: Callable | None = None) -> ExperimentResult:
    """Average total power per (N, algorithm), all power caps at +inf."""
    records = []
    for N, P in zip(config.users, config.candidate_sizes):
        log.info("power experiment: N=%d P=%d trials=%d", N, P, config.trials)
        if trace is not None:
            run_algorithm("mp", make_instance(config, N, 0), config, P, trace=trace)
            trace = None
        jobs = [(config, N, P, t) for t in range(config.trials)]
        for trial_out in _map_trials(_power_trial, jobs, config.workers):
            records.extend(rec for rec, _ in trial_out)
    return ExperimentResult(_power_rows(config, records), records)


def calibrate_pmax_sweep(config: ExperimentConfig, N: int, P: int, trials: int | None = None) -> tuple:
    """P_max values at evenly spaced quantiles (1st..99th percentile) of the uncapped per-user powers.

    Only the largest user power of each trial and algorithm is pooled: it alone
    decides whether that trial has a user in outage, so the points spread over
    the whole outage curve instead of bunching where it is flat at 1.
    """
    trials = trials or min(config.trials, 50)
    worst = []
    for trial_out in _map_trials(_power_trial, [(config, N, P, t) for t in range(trials)], config.workers):
        for rec, user_power in trial_out:
            worst.append(float(np.max(user_power)))
    levels = np.percentile(worst, np.linspace(1, 99, config.pmax_points))
    return tuple(sorted({float(v) for v in levels if v > 0}))


def _outage_trial(args):
    config, N, P, trial, sweep = args
    base = make_instance(config, N, trial)
    seed = trial_seed(config.seed, N, trial)
    out = []
    for alg in config.algorithms:
        if alg == "mp":
            for pmax in sweep:
                t0 = time.perf_counter()
                inst = base.replace(power_caps=np.full(N, pmax))
                power, outage, _ = run_algorithm("mp", inst, config, P)
                out.append(TrialRecord(seed, N, alg, power, outage, time.perf_counter() - t0, trial, pmax))
        else:
            # allocation ignores the cap; the cap is checked afterwards
            t0 = time.perf_counter()
            power, outage, user_power = run_algorithm(alg, base, config, P)
            elapsed = time.perf_counter() - t0
            for pmax in sweep:
                flags = tuple(bool(o or p > pmax) for o, p in zip(outage, user_power))
                out.append(TrialRecord(seed, N, alg, power, flags, elapsed, trial, pmax))
    return out


def run_outage_experiment(config: ExperimentConfig, sweeps: dict | None = None) -> ExperimentResult:
    """Outage probability (at least one user in outage) per (N, algorithm, P_max)."""
    rows, records = [], []
    sweeps = dict(sweeps or {})
    for N, P in zip(config.users, config.candidate_sizes):
        sweep = sweeps.get(N) or config.pmax_sweep or calibrate_pmax_sweep(config, N, P)
        sweep = tuple(sorted(sweep))
        if not sweep:
            raise ConfigurationError("P_max sweep is empty")
        log.info("outage experiment: N=%d P=%d sweep=%s", N, P, sweep)
        jobs = [(config, N, P, t, sweep) for t in range(config.trials)]
        n_records = []
        for trial_out in _map_trials(_outage_trial, jobs, config.workers):
            n_records.extend(trial_out)
        records.extend(n_records)
        for alg in config.algorithms:
            for pmax in sweep:
                hits = [r.any_outage for r in n_records if r.algorithm == alg and r.pmax == pmax]
                p = float(np.mean(hits))
                se = math.sqrt(p * (1 - p) / len(hits))
                rows.append(ResultRow("outage", N, alg, pmax, p, se, len(hits), config.seed))
    return ExperimentResult(rows, records)


# --- output ---


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_results(rows: Iterable[ResultRow], fh, fmt: str = "csv") -> None:
    """Write result rows to an open text stream as CSV (with header) or JSON lines."""
    if fmt == "csv":
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in rows:
            writer.writerow([_fmt(getattr(r, k)) for k in CSV_HEADER])
    elif fmt == "jsonl":
        for r in rows:
            fh.write(json.dumps({k: _json_value(getattr(r, k)) for k in CSV_HEADER}) + "\n")
    else:
        raise ConfigurationError(f"unknown output format {fmt!r}")


def emit_results(rows: Iterable[ResultRow], path: str | Path, fmt: str = "csv") -> Path:
    path = Path(path)
    rows = list(rows)
    if fmt not in ("csv", "jsonl"):
        raise ConfigurationError(f"unknown output format {fmt!r}")
    with path.open("w", newline="") as fh:
        write_results(rows, fh, fmt)
    return path


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def read_results(path: str | Path, fmt: str = "csv") -> list:
    """Inverse of :func:`emit_results`."""
    path = Path(path)
    rows = []
    if fmt == "csv":
        with path.open(newline="") as fh:
            for rec in csv.DictReader(fh):
                rows.append(_row_from(rec))
    else:
        with path.open() as fh:
            for line in fh:
                if line.strip():
                    rows.append(_row_from(json.loads(line)))
    return rows


def _row_from(rec: dict) -> ResultRow:
    def num(v):
        return math.nan if v is None else float(v)

    return ResultRow(
        experiment=rec["experiment"],
        N=int(rec["N"]),
        algorithm=rec["algorithm"],
        param=num(rec["param"]),
        value=num(rec["value"]),
        stderr=num(rec["stderr"]),
        trials=int(rec["trials"]),
        seed=int(rec["seed"]),
    )
