"""Exhaustive reference solvers. Test-only; every routine refuses oversized searches."""
from __future__ import annotations

import itertools
import math

import numpy as np

from .problem import INF, ProblemInstance, global_cost

GLOBAL_GUARD = 10**7
SINGLE_USER_GUARD = 10**6


class SearchTooLarge(RuntimeError):
    pass


def _guard(size: int, limit: int):
    if size > limit:
        raise SearchTooLarge(f"search space {size} exceeds guard {limit}")


def brute_force_global(instance: ProblemInstance, candidate_sets):
    """Minimum of the global cost over allocations supported on the candidate sets.

    Returns ``(value, allocation)``; ties go to the lexicographically smallest
    allocation in (user, candidate) order. ``(inf, None)`` if nothing is feasible.
    """
    Q = instance.format_set.num_formats
    slots = [(n, int(f)) for n, cands in enumerate(candidate_sets) for f in cands]
    _guard((Q + 1) ** len(slots), GLOBAL_GUARD)
    best, best_x = INF, None
    x = np.zeros((instance.num_users, instance.num_subchannels), dtype=int)
    for combo in itertools.product(range(Q + 1), repeat=len(slots)):
        for (n, f), q in zip(slots, combo):
            x[n, f] = q
        value = global_cost(instance, candidate_sets, x)
        if value < best:
            best, best_x = value, x.copy()
    return best, best_x


def brute_force_single_user(costs, d_min: int, powers=None, budget: float = INF):
    """Enumerate every format vector of the restricted single-user problem.

    ``powers`` are real-valued (unquantized); ``budget=inf`` drops the power
    constraint. Ties resolve to the lexicographically smallest vector.
    """
    costs = np.atleast_2d(np.asarray(costs, dtype=float))
    n_ch = costs.shape[0] if costs.size else 0
    Q = costs.shape[1] - 1
    _guard((Q + 1) ** n_ch, SINGLE_USER_GUARD)
    best, best_vec = INF, np.zeros(0, dtype=int)
    for vec in itertools.product(range(Q + 1), repeat=n_ch):
        if sum(vec) < d_min:
            continue
        if powers is not None and budget != INF:
            spent = sum(powers[f][h] for f, h in enumerate(vec))
            if spent > budget:
                continue
        value = sum(costs[f][h] for f, h in enumerate(vec))
        if value < best:
            best, best_vec = value, np.array(vec, dtype=int)
    return float(best), best_vec


def brute_force_c_message(incoming, target: int):
    """Direct minimization for the exclusivity node's message to neighbor ``target``.

    ``incoming[k]`` is the variable-to-node message of neighbor ``k``.
    """
    incoming = np.atleast_2d(np.asarray(incoming, dtype=float))
    K, width = incoming.shape
    others = [k for k in range(K) if k != target]
    _guard(width ** len(others), SINGLE_USER_GUARD)
    out = np.full(width, INF)
    for q in range(width):
        for combo in itertools.product(range(width), repeat=len(others)):
            active = sum(1 for h in combo if h >= 1) + (1 if q >= 1 else 0)
            if active > 1:
                continue
            value = 0.0
            for k, h in zip(others, combo):
                value += incoming[k, h]
            out[q] = min(out[q], value)
    return out


def brute_force_w_message(powers, incoming, target: int, demand_units: int, power_cap: float = INF):
    """Direct minimization for the user node's message to its edge ``target``.

    ``powers[i, h]`` is the real power of format ``h`` on the user's ``i``-th
    candidate and ``incoming`` the matching variable-to-node messages. The
    target edge contributes its own power only; its incoming message is left
    out.
    """
    powers = np.asarray(powers, dtype=float)
    incoming = np.asarray(incoming, dtype=float)
    P, width = powers.shape
    others = [i for i in range(P) if i != target]
    _guard(width ** len(others), SINGLE_USER_GUARD)
    out = np.full(width, INF)
    for q in range(width):
        for combo in itertools.product(range(width), repeat=len(others)):
            if sum(combo) + q < demand_units:
                continue
            spent = powers[target, q] + sum(powers[i, h] for i, h in zip(others, combo))
            if spent > power_cap:
                continue
            value = powers[target, q]
            for i, h in zip(others, combo):
                value += powers[i, h] + incoming[i, h]
            out[q] = min(out[q], value)
    return out


def exhaustive_balanced_assignment(cost: np.ndarray, per_user: int):
    """Cheapest way to give each row exactly ``per_user`` columns (each column used once)."""
    N, F = cost.shape
    if N * per_user != F:
        raise ValueError("rows * per_user must equal columns")
    _guard(math.factorial(F), SINGLE_USER_GUARD)
    best, best_owner = INF, None
    slots = [n for n in range(N) for _ in range(per_user)]
    for perm in set(itertools.permutations(slots)):
        value = sum(cost[n, f] for f, n in enumerate(perm))
        if value < best or (value == best and perm < best_owner):
            best, best_owner = value, perm
    return best, np.array(best_owner, dtype=int)
