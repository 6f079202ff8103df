"""Dynamic program for the restricted single-user subproblem.

A user chooses at most one format ``h`` per subchannel, paying ``c[f, h]``,
with total rate ``sum(h) >= d_min`` (in units of ``B * eta_step``) and total
integer power ``sum(w[f, h]) <= budget``.  The table ``z_p(d, k)`` holds the
cheapest choice on the first ``p`` subchannels with exact rate ``d`` and
power at most ``k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

INF = math.inf

DEFAULT_RESOLUTION = 1000


@dataclass
class RestrictedProblem:
    costs: np.ndarray
    d_min: int
    powers: np.ndarray | None = None
    budget: int | None = None

    def __post_init__(self):
        self.costs = np.atleast_2d(np.asarray(self.costs, dtype=float))
        if self.costs.size == 0:
            self.costs = self.costs.reshape(0, max(self.costs.shape[-1], 1))
        self.d_min = max(0, int(self.d_min))
        if self.powers is not None:
            self.powers = np.asarray(self.powers, dtype=np.int64).reshape(self.costs.shape)
            if np.any(self.powers < 0):
                raise ValueError("quantized powers must be nonnegative")
        if self.budget is not None:
            self.budget = int(self.budget)

    @property
    def num_channels(self) -> int:
        return self.costs.shape[0]

    @property
    def Q(self) -> int:
        return self.costs.shape[1] - 1

    @property
    def max_units(self) -> int:
        return self.Q * self.num_channels


def quantize_powers(powers, budget: float, resolution: int = DEFAULT_RESOLUTION):
    """Map real powers and budget onto an integer grid of ``resolution`` budget units.

    Powers round up and the budget rounds down, so a format choice accepted on
    the grid never exceeds the real budget.
    """
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    powers = np.asarray(powers, dtype=float)
    if not budget > 0:
        return np.where(powers > 0, 1, 0).astype(np.int64), 0
    unit = budget / resolution
    scaled = np.where(np.isfinite(powers), powers / unit, resolution + 1.0)
    units = np.ceil(scaled)
    units = np.minimum(units, resolution + 1).astype(np.int64)
    return units, resolution


def _step(prev: np.ndarray, costs: np.ndarray, powers: np.ndarray | None) -> np.ndarray:
    """One layer of the recursion: add subchannel with format costs ``costs``."""
    D = prev.shape[0] - 1
    new = prev + costs[0]
    for h in range(1, costs.shape[0]):
        if h > D or costs[h] == INF:
            continue
        if powers is None:
            cand = np.full_like(prev, INF)
            cand[h:] = prev[: D + 1 - h] + costs[h]
        else:
            w = int(powers[h])
            K = prev.shape[1] - 1
            if w > K:
                continue
            cand = np.full_like(prev, INF)
            cand[h:, w:] = prev[: D + 1 - h, : K + 1 - w] + costs[h]
        np.minimum(new, cand, out=new)
    return new


def dp_table(problem: RestrictedProblem, relaxed: bool = False) -> list[np.ndarray]:
    """All layers ``z_0 .. z_P``; each of shape ``(Q*P + 1, budget + 1)`` (or 1-d if relaxed)."""
    D = problem.max_units
    if relaxed:
        z = np.full(D + 1, INF)
        z[0] = 0.0
        powers = None
    else:
        if problem.budget is None or problem.powers is None:
            raise ValueError("power-constrained solve needs integer powers and budget")
        if problem.budget < 0:
            return []
        z = np.full((D + 1, problem.budget + 1), INF)
        z[0, :] = 0.0
        powers = problem.powers
    layers = [z]
    for p in range(problem.num_channels):
        z = _step(z, problem.costs[p], None if powers is None else powers[p])
        layers.append(z)
    return layers


def _backtrack(problem: RestrictedProblem, layers, d: int, k: int | None) -> np.ndarray:
    formats = np.zeros(problem.num_channels, dtype=int)
    for p in range(problem.num_channels, 0, -1):
        cur, prev = layers[p], layers[p - 1]
        target = cur[d] if k is None else cur[d, k]
        c = problem.costs[p - 1]
        for h in range(problem.Q + 1):
            if d - h < 0:
                break
            if k is None:
                before = prev[d - h]
                kk = None
            else:
                kk = k - int(problem.powers[p - 1, h])
                if kk < 0:
                    continue
                before = prev[d - h, kk]
            if before + c[h] == target:
                formats[p - 1] = h
                d, k = d - h, kk
                break
        else:  # pragma: no cover - the table was built from these transitions
            raise RuntimeError("backtracking found no consistent transition")
    return formats


def _extract(problem: RestrictedProblem, layers, relaxed: bool):
    if problem.d_min > problem.max_units or not layers:
        return INF, np.zeros(0, dtype=int)
    last = layers[-1]
    tail = last[problem.d_min :] if relaxed else last[problem.d_min :, problem.budget]
    j = int(np.argmin(tail))
    value = float(tail[j])
    if value == INF:
        return INF, np.zeros(0, dtype=int)
    d = problem.d_min + j
    formats = _backtrack(problem, layers, d, None if relaxed else problem.budget)
    return value, formats


def dp_solve(problem: RestrictedProblem):
    """Optimal value and per-subchannel formats; ``(inf, [])`` when infeasible."""
    if problem.budget is None:
        return dp_solve_relaxed(problem)
    return _extract(problem, dp_table(problem), relaxed=False)


def dp_solve_relaxed(problem: RestrictedProblem):
    """Same as :func:`dp_solve` with the power budget dropped."""
    return _extract(problem, dp_table(problem, relaxed=True), relaxed=True)
