"""Comparison allocators: BRCG (BABS + RCG + bit loading) and fixed-format assignment.

Neither takes the power cap into account while allocating; a user is flagged
in outage afterwards if its power exceeds the cap (or its rate is not met).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .problem import INF, ConfigurationError, ProblemInstance, user_powers, user_rates


@dataclass
class BaselineResult:
    allocation: np.ndarray
    user_power: np.ndarray
    outage: np.ndarray

    @property
    def total_power(self) -> float:
        return float(self.user_power.sum())

    @property
    def all_fulfilled(self) -> bool:
        return not bool(self.outage.any())


def _finish(instance: ProblemInstance, x: np.ndarray, forced_outage=None) -> BaselineResult:
    power = user_powers(instance, x)
    rate_short = user_rates(instance, x) < instance.rate_demands * (1 - 1e-12)
    outage = (power > instance.power_caps) | rate_short
    if forced_outage is not None:
        outage |= forced_outage
    return BaselineResult(allocation=x, user_power=power, outage=outage)


# --- BRCG ---


def _equal_split_power(units: float, m: int, snr_unit_noise: float, gain: float, eta_step: float) -> float:
    """Power of carrying ``units`` rate steps spread evenly over ``m`` channels of gain ``gain``."""
    if units <= 0:
        return 0.0
    if m <= 0:
        return INF
    return m * (2.0 ** (units * eta_step / m) - 1.0) * snr_unit_noise / gain


def babs(instance: ProblemInstance) -> np.ndarray:
    """Number of subchannels per user from its demand and mean channel gain.

    Start every user at the fewest channels that can carry its demand at the
    top format, then hand out the remaining channels one at a time to the user
    whose estimated (equal-split) power drops the most.
    """
    N, F = instance.num_users, instance.num_subchannels
    Q = instance.format_set.num_formats
    eta = instance.format_set.eta_step
    demand = np.array([instance.demand_units(n) for n in range(N)])
    mean_gain = instance.gains.mean(axis=1)
    noise = instance.noise_power
    counts = np.array([math.ceil(d / Q) for d in demand], dtype=int)
    if counts.sum() > F:
        # proportional trim, largest-remainder rounding, at least one for active users
        share = counts * F / counts.sum()
        trimmed = np.floor(share).astype(int)
        trimmed[(demand > 0) & (trimmed == 0)] = 1
        order = np.argsort(-(share - np.floor(share)), kind="stable")
        for n in order:
            if trimmed.sum() >= F:
                break
            if trimmed[n] < counts[n]:
                trimmed[n] += 1
        while trimmed.sum() > F:
            trimmed[int(np.argmax(trimmed))] -= 1
        return trimmed

    def est(n, m):
        return _equal_split_power(demand[n], m, noise, mean_gain[n], eta)

    while counts.sum() < F:
        gains = np.array(
            [est(n, counts[n]) - est(n, counts[n] + 1) if demand[n] > 0 else -INF for n in range(N)]
        )
        best = int(np.argmax(gains))
        if not gains[best] > 0:
            break
        counts[best] += 1
    return counts


def rcg(instance: ProblemInstance, counts: np.ndarray, max_swaps: int = 1000) -> list:
    """Place ``counts[n]`` specific subchannels per user.

    Users take turns, neediest first (largest estimated power), each picking
    its best free subchannel. A swap pass then exchanges subchannels between
    pairs of users whenever that lowers the summed estimated power.
    """
    N, F = instance.num_users, instance.num_subchannels
    eta = instance.format_set.eta_step
    demand = np.array([instance.demand_units(n) for n in range(N)])
    mean_gain = instance.gains.mean(axis=1)
    # per-channel SNR target when the demand is split evenly over the user's channels
    weight = np.array(
        [
            (2.0 ** (demand[n] * eta / counts[n]) - 1.0) if counts[n] > 0 else 0.0
            for n in range(N)
        ]
    )
    need = weight * counts / mean_gain
    order = sorted(range(N), key=lambda n: (-need[n], n))
    owned: list = [[] for _ in range(N)]
    free = set(range(F))
    remaining = counts.copy()
    while free and remaining.sum() > 0:
        progressed = False
        for n in order:
            if remaining[n] <= 0 or not free:
                continue
            pool = sorted(free)
            f = pool[int(np.argmax(instance.gains[n, pool]))]
            owned[n].append(f)
            free.discard(f)
            remaining[n] -= 1
            progressed = True
        if not progressed:
            break

    cost = weight[:, None] / instance.gains
    for _ in range(max_swaps):
        best_delta, best_swap = 0.0, None
        for a in range(N):
            for b in range(a + 1, N):
                for ia, fa in enumerate(owned[a]):
                    for ib, fb in enumerate(owned[b]):
                        delta = cost[a, fb] + cost[b, fa] - cost[a, fa] - cost[b, fb]
                        if delta < best_delta - 1e-15:
                            best_delta, best_swap = delta, (a, ia, b, ib)
        if best_swap is None:
            break
        a, ia, b, ib = best_swap
        owned[a][ia], owned[b][ib] = owned[b][ib], owned[a][ia]
    return [sorted(o) for o in owned]


def bit_loading(instance: ProblemInstance, n: int, channels) -> tuple[np.ndarray, bool]:
    """Greedy loading: raise one format step at a time where the extra power is smallest.

    Returns formats on ``channels`` and whether the demand was reached.
    """
    Q = instance.format_set.num_formats
    need = instance.demand_units(n)
    table = instance.power_table()[n]
    channels = list(channels)
    q = np.zeros(len(channels), dtype=int)
    while q.sum() < need:
        best, pick = INF, None
        for i, f in enumerate(channels):
            if q[i] >= Q:
                continue
            step = table[f, q[i] + 1] - table[f, q[i]]
            if step < best:
                best, pick = step, i
        if pick is None:
            return q, False
        q[pick] += 1
    return q, True


def brcg_allocate(instance: ProblemInstance) -> BaselineResult:
    N, F = instance.num_users, instance.num_subchannels
    counts = babs(instance)
    owned = rcg(instance, counts)
    x = np.zeros((N, F), dtype=int)
    forced = np.zeros(N, dtype=bool)
    for n in range(N):
        if instance.demand_units(n) == 0:
            continue
        if not owned[n]:
            forced[n] = True
            continue
        q, ok = bit_loading(instance, n, owned[n])
        x[n, owned[n]] = q
        forced[n] = not ok
    return _finish(instance, x, forced)


# --- fixed format ---


def balanced_assignment(cost: np.ndarray, per_user: int) -> np.ndarray:
    """Owner of each column when every row gets exactly ``per_user`` columns at least total cost."""
    N, F = cost.shape
    if N * per_user != F:
        raise ConfigurationError(f"{N} users cannot split {F} subchannels evenly")
    slots = np.repeat(np.arange(N), per_user)
    rows, cols = linear_sum_assignment(cost[slots])
    owner = np.empty(F, dtype=int)
    owner[cols] = slots[rows]
    return owner


def fixed_format_assign(instance: ProblemInstance, eta_avg: float = 1.0) -> BaselineResult:
    """F/N subchannels per user, all at the format whose efficiency is ``eta_avg``."""
    N, F = instance.num_users, instance.num_subchannels
    if F % N:
        raise ConfigurationError(f"number of users {N} must divide {F} subchannels")
    q = instance.format_set.format_for_efficiency(eta_avg)
    cost = instance.power_table()[:, :, q]
    owner = balanced_assignment(cost, F // N)
    x = np.zeros((N, F), dtype=int)
    x[owner, np.arange(F)] = q
    return _finish(instance, x)
