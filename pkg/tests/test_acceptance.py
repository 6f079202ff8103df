"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

The lines are also collected and repeated in the terminal summary
(see ``conftest.py``), so ``pytest tests/test_acceptance.py`` shows them
without ``-s``.  Running this file directly prints them as well.
"""
import math
import time

import numpy as np
import pytest
from scipy import stats

from mpalloc.dp import RestrictedProblem, dp_solve
from mpalloc.harness import (
    ExperimentConfig,
    calibrate_pmax_sweep,
    run_outage_experiment,
    run_power_experiment,
)
from mpalloc.mp import MPConfig, c_node_update, normalize, run_mp, w_node_messages, w_node_update
from mpalloc.oracle import (
    brute_force_c_message,
    brute_force_global,
    brute_force_single_user,
    brute_force_w_message,
)
from mpalloc.problem import FormatSet, ProblemInstance, candidate_set, feasibility_violations

REPORT: list = []
EXPERIMENT_TRIALS = 200
SEED = 2024


def report(number: int, ok: bool, detail: str):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    REPORT.append(line)
    print(line)
    return ok


def _instance(gains, demand_units, caps=None, Q=4):
    gains = np.asarray(gains, dtype=float)
    N = gains.shape[0]
    caps = np.full(N, np.inf) if caps is None else np.asarray(caps, dtype=float)
    return ProblemInstance(gains, np.asarray(demand_units, dtype=float), caps, FormatSet(Q, 1.0))


# --- 1 ---


def test_dp_matches_oracle():
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    mismatches = 0
    for _ in range(1000):
        P, Q = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        # integer costs keep every sum exact; the wide range makes ties vanishingly rare
        costs = rng.integers(-10**6, 10**6, size=(P, Q + 1)).astype(float)
        powers = rng.integers(0, 8, size=(P, Q + 1))
        powers[:, 0] = 0
        budget = int(rng.integers(0, 21))
        d_min = int(rng.integers(0, P * Q + 2))
        value, vec = dp_solve(RestrictedProblem(costs, d_min, powers, budget))
        ref, ref_vec = brute_force_single_user(costs, d_min, powers, budget)
        same_vec = (value == math.inf and ref == math.inf) or np.array_equal(vec, ref_vec)
        if value != ref or not same_vec:
            mismatches += 1
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and elapsed < 10
    report(1, ok, f"dp_solve vs brute force, 1000 problems, {mismatches} mismatches, {elapsed:.2f} s")
    assert ok


# --- 2 ---


def test_messages_match_oracle():
    rng = np.random.default_rng(SEED + 1)
    t0 = time.perf_counter()
    bad_c = bad_w = 0
    for _ in range(1000):
        K, width = int(rng.integers(1, 5)), int(rng.integers(2, 5))
        incoming = rng.integers(-20, 21, size=(K, width)).astype(float)
        incoming[rng.random((K, width)) < 0.1] = math.inf
        target = int(rng.integers(K))
        if not np.array_equal(c_node_update(incoming, target), brute_force_c_message(incoming, target)):
            bad_c += 1

        P, Q = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        powers = np.sort(rng.integers(1, 10, size=(P, Q + 1)), axis=1).astype(float)
        powers[:, 0] = 0.0
        msgs = rng.integers(-5, 6, size=(P, Q + 1)).astype(float)
        demand = int(rng.integers(0, P * Q + 2))
        cap = math.inf if rng.random() < 0.3 else float(rng.integers(0, 30))
        resolution = int(cap) if 1 <= cap < math.inf else 1  # one grid unit per power unit: exact
        target = int(rng.integers(P))
        ref = brute_force_w_message(powers, msgs, target, demand, cap)
        literal = w_node_update(powers, msgs, target, demand, cap, resolution)
        fast = w_node_messages(powers, msgs, demand, cap, resolution)[target]
        if not (np.array_equal(literal, ref) and np.array_equal(fast, ref)):
            bad_w += 1
    elapsed = time.perf_counter() - t0
    ok = bad_c == 0 and bad_w == 0 and elapsed < 30
    report(2, ok, f"C/W messages vs brute force, 1000 cases each, mismatches C={bad_c} W={bad_w}, {elapsed:.2f} s")
    assert ok


# --- 3 ---


def test_tree_exactness():
    rng = np.random.default_rng(SEED + 2)
    t0 = time.perf_counter()
    wrong = 0
    for _ in range(200):
        N, P, Q = int(rng.integers(1, 4)), int(rng.integers(1, 5)), int(rng.integers(1, 5))
        F = N * P
        gains = rng.uniform(0.001, 0.01, size=(N, F))
        for n in range(N):
            gains[n, n * P : (n + 1) * P] = rng.exponential(size=P) + 0.05
        demand = rng.integers(0, P * Q + 1, size=N)
        inst = _instance(gains, demand, Q=Q)
        res = run_mp(inst, MPConfig(candidate_size=P, inner_iterations=10))
        table = inst.power_table()
        expected, alloc = 0.0, np.zeros_like(res.allocation)
        for n in range(N):
            cands = candidate_set(inst, n, P)
            value, vec = dp_solve(RestrictedProblem(table[n, cands], int(demand[n])))
            expected += value
            alloc[n, cands] = vec
        if not (res.all_fulfilled and np.array_equal(res.allocation, alloc)
                and math.isclose(res.total_power, expected, rel_tol=1e-12)):
            wrong += 1
    elapsed = time.perf_counter() - t0
    ok = wrong == 0 and elapsed < 30
    report(3, ok, f"MP on disjoint candidate sets equals per-user DP in {200 - wrong}/200 instances, {elapsed:.2f} s")
    assert ok


# --- 4 ---


def test_small_instance_quality():
    rng = np.random.default_rng(SEED + 3)
    feasible = close = violations = 0
    for _ in range(100):
        inst = _instance(rng.exponential(size=(2, 4)), rng.integers(1, 3, size=2), Q=1)
        opt, _ = brute_force_global(inst, [range(4), range(4)])
        res = run_mp(inst, MPConfig(candidate_size=2))
        if feasibility_violations(inst, res.allocation, ~res.outage):
            violations += 1
        if opt == math.inf:
            continue
        feasible += 1
        if res.all_fulfilled and res.total_power <= 1.05 * opt:
            close += 1
    share = close / feasible
    ok = share >= 0.9 and violations == 0
    report(4, ok, f"N=2 F=4 P=2 Q=1: within 5% of optimum in {close}/{feasible} feasible ({share:.1%}), "
                  f"{violations} constraint violations")
    assert ok


# --- 5 ---


@pytest.fixture(scope="module")
def power_records():
    config = ExperimentConfig(trials=EXPERIMENT_TRIALS, seed=SEED)
    t0 = time.perf_counter()
    result = run_power_experiment(config)
    return config, result, time.perf_counter() - t0


def _paired(records, N, a, b):
    by = {}
    for r in records:
        if r.N == N and not r.any_outage:
            by.setdefault(r.trial, {})[r.algorithm] = r.total_power
    return np.array([v[a] - v[b] for v in by.values() if a in v and b in v])


def _upper_bound(diff):
    """One-sided 95% upper confidence bound on the mean paired difference."""
    if diff.size < 2 or np.all(diff == diff[0]):
        return float(diff.mean()) if diff.size else math.inf
    se = diff.std(ddof=1) / math.sqrt(diff.size)
    return float(diff.mean() + stats.t.ppf(0.95, diff.size - 1) * se)


def test_power_trends(power_records):
    config, result, elapsed = power_records
    means = {(r.N, r.algorithm): r.value for r in result.rows}
    lines, ok = [], True

    for alg in config.algorithms:
        curve = [means[(N, alg)] for N in config.users]
        mono = all(a >= b for a, b in zip(curve, curve[1:]))
        ok &= mono
        lines.append(f"{alg} means {', '.join(f'{v:.4g}' for v in curve)} nonincreasing={mono}")

    for N in config.users:
        for other in ("lp", "brcg"):
            ub = _upper_bound(_paired(result.records, N, "mp", other))
            ok &= ub <= 0
            lines.append(f"N={N} mean(MP-{other.upper()}) upper95={ub:.3g}")
    ub = _upper_bound(_paired(result.records, 16, "lp", "brcg"))
    ok &= ub <= 0
    lines.append(f"N=16 mean(LP-BRCG) upper95={ub:.3g}")
    ok_time = elapsed < 600
    ok &= ok_time
    report(5, ok, f"{config.trials} trials, {elapsed:.0f} s; " + "; ".join(lines))
    assert ok


# --- 6 ---


@pytest.fixture(scope="module")
def outage_records():
    config = ExperimentConfig(users=(2, 16), candidate_sizes=(24, 24), trials=EXPERIMENT_TRIALS, seed=SEED)
    sweeps = {N: calibrate_pmax_sweep(config, N, P) for N, P in zip(config.users, config.candidate_sizes)}
    return config, run_outage_experiment(config, sweeps), sweeps


def test_outage_ordering(outage_records):
    config, result, sweeps = outage_records
    ok, lines = True, []
    for N in config.users:
        for alg in config.algorithms:
            curve = [r.value for r in result.rows if r.N == N and r.algorithm == alg]
            mono = all(a >= b for a, b in zip(curve, curve[1:]))
            ok &= mono
            lines.append(f"N={N} {alg} P_o={'/'.join(f'{v:.3f}' for v in curve)}")
        for pmax in sweeps[N]:
            flags = {}
            for r in result.records:
                if r.N == N and r.pmax == pmax:
                    flags.setdefault(r.algorithm, {})[r.trial] = r.any_outage
            for other in ("brcg", "lp"):
                worse = sum(flags["mp"][t] and not flags[other][t] for t in flags["mp"])
                better = sum(flags[other][t] and not flags["mp"][t] for t in flags["mp"])
                if worse + better == 0:
                    continue
                p = stats.binomtest(worse, worse + better, 0.5, alternative="greater").pvalue
                if p < 0.05:
                    ok = False
                    lines.append(f"N={N} P_max={pmax:.3g} MP worse than {other}: {worse} vs {better}, p={p:.3g}")
    report(6, ok, f"{config.trials} trials; " + "; ".join(lines))
    assert ok


# --- 7 ---


def test_invariants_and_determinism(power_records, outage_records):
    # feasibility of every non-outage MP result is enforced inside the harness (it raises),
    # so the experiments above completing is the check over all experiment runs
    _, power, _ = power_records
    _, outage, _ = outage_records
    n_mp = sum(r.algorithm == "mp" for r in power.records + outage.records)

    small = ExperimentConfig(users=(4,), candidate_sizes=(8,), trials=3, seed=SEED, pmax_sweep=(0.5, 2.0))
    repeat_harness = (
        run_power_experiment(small).rows == run_power_experiment(small).rows
        and run_outage_experiment(small).rows == run_outage_experiment(small).rows
    )
    rng = np.random.default_rng(SEED + 4)
    inst = _instance(rng.exponential(size=(4, 16)), [4, 4, 4, 4], caps=[5.0] * 4)
    a, b = run_mp(inst, MPConfig(candidate_size=8)), run_mp(inst, MPConfig(candidate_size=8))
    repeat_mp = np.array_equal(a.allocation, b.allocation) and a.status == b.status

    argmin_ok = True
    for _ in range(1000):
        m = rng.normal(scale=10, size=int(rng.integers(2, 6)))
        m[rng.random(m.size) < 0.2] = math.inf
        if np.isfinite(m).any() and np.argmin(normalize(m)) != np.argmin(m):
            argmin_ok = False
    ok = repeat_harness and repeat_mp and argmin_ok
    report(7, ok, f"{n_mp} MP runs feasibility-checked, harness deterministic={repeat_harness}, "
                  f"run_mp deterministic={repeat_mp}, normalize argmin-invariant={argmin_ok}")
    assert ok


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
