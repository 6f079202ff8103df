"""Data model of the uplink OFDMA allocation problem.

Powers are in relative units: ``B * N0 / |H|^2`` with the path-loss gain
normalized to 1 at the cell edge (see :mod:`mpalloc.channel`).
Infeasibility is encoded as ``math.inf`` throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

INF = math.inf

# slack when converting a bit rate to integer multiples of B * eta_step
_RATE_TOL = 1e-9


class ConfigurationError(ValueError):
    """Raised on inconsistent dimensions or out-of-range parameters."""


@dataclass(frozen=True)
class FormatSet:
    """Formats ``q = 0..Q`` with spectral efficiency ``eta_q = q * eta_step``."""

    num_formats: int = 4
    eta_step: float = 1.0

    def __post_init__(self):
        if self.num_formats < 1:
            raise ConfigurationError("need at least one nonzero format")
        if not self.eta_step > 0:
            raise ConfigurationError("eta_step must be positive")

    @property
    def Q(self) -> int:
        return self.num_formats

    @property
    def eta(self) -> np.ndarray:
        return self.eta_step * np.arange(self.num_formats + 1, dtype=float)

    @property
    def snr(self) -> np.ndarray:
        return np.exp2(self.eta) - 1.0

    def snr_required(self, q: int) -> float:
        return snr_required(self, q)

    def format_for_efficiency(self, eta: float) -> int:
        """Index of the format whose efficiency equals ``eta``."""
        q = int(round(eta / self.eta_step))
        if q < 1 or q > self.num_formats or not math.isclose(q * self.eta_step, eta):
            raise ConfigurationError(f"no format with spectral efficiency {eta}")
        return q


def snr_required(format_set: FormatSet, q: int) -> float:
    """Target SNR ``2**eta_q - 1`` of format ``q``."""
    if not 0 <= q <= format_set.num_formats:
        raise ConfigurationError(f"format index {q} outside 0..{format_set.num_formats}")
    return float(2.0 ** (q * format_set.eta_step) - 1.0)


@dataclass
class ProblemInstance:
    gains: np.ndarray
    rate_demands: np.ndarray
    power_caps: np.ndarray
    format_set: FormatSet = field(default_factory=FormatSet)
    subchannel_bandwidth: float = 1.0
    noise_psd: float = 1.0

    def __post_init__(self):
        self.gains = np.atleast_2d(np.asarray(self.gains, dtype=float))
        n, _ = self.gains.shape
        self.rate_demands = np.asarray(self.rate_demands, dtype=float).reshape(-1)
        self.power_caps = np.asarray(self.power_caps, dtype=float).reshape(-1)
        if n < 1:
            raise ConfigurationError("instance needs at least one user")
        if self.rate_demands.shape != (n,) or self.power_caps.shape != (n,):
            raise ConfigurationError(
                f"rate_demands/power_caps must have length {n}, got "
                f"{self.rate_demands.shape[0]}/{self.power_caps.shape[0]}"
            )
        if not np.all(np.isfinite(self.gains)) or np.any(self.gains <= 0):
            raise ConfigurationError("gains must be positive and finite")
        if np.any(self.rate_demands < 0):
            raise ConfigurationError("rate demands must be nonnegative")
        if np.any(np.isnan(self.power_caps)) or np.any(self.power_caps < 0):
            raise ConfigurationError("power caps must be nonnegative (inf allowed)")
        self.gains.setflags(write=False)
        self.rate_demands.setflags(write=False)
        self.power_caps.setflags(write=False)

    @property
    def num_users(self) -> int:
        return self.gains.shape[0]

    @property
    def num_subchannels(self) -> int:
        return self.gains.shape[1]

    @property
    def noise_power(self) -> float:
        """``B * N0`` of one subchannel."""
        return self.subchannel_bandwidth * self.noise_psd

    @property
    def rate_unit(self) -> float:
        """Bit rate carried by one step of spectral efficiency on one subchannel."""
        return self.subchannel_bandwidth * self.format_set.eta_step

    def power_table(self) -> np.ndarray:
        """Array ``P[n, f, q]`` of required powers, shape ``(N, F, Q+1)``."""
        snr = self.format_set.snr
        return snr[None, None, :] * (self.noise_power / self.gains[:, :, None])

    def power_required(self, n: int, f: int, q: int) -> float:
        return power_required(self, n, f, q)

    def demand_units(self, n: int) -> int:
        return rate_to_units(self.rate_demands[n], self.rate_unit)

    def replace(self, **changes) -> "ProblemInstance":
        kwargs = dict(
            gains=self.gains,
            rate_demands=self.rate_demands,
            power_caps=self.power_caps,
            format_set=self.format_set,
            subchannel_bandwidth=self.subchannel_bandwidth,
            noise_psd=self.noise_psd,
        )
        kwargs.update(changes)
        return ProblemInstance(**kwargs)


def rate_to_units(rate: float, unit: float) -> int:
    """Smallest integer number of ``unit`` steps carrying at least ``rate``."""
    if rate <= 0:
        return 0
    return max(0, math.ceil(rate / unit - _RATE_TOL))


def power_required(instance: ProblemInstance, n: int, f: int, q: int) -> float:
    """``SNR(q) * B * N0 / |H_{n,f}|^2``; exactly 0 for ``q = 0``."""
    if not (0 <= n < instance.num_users and 0 <= f < instance.num_subchannels):
        raise ConfigurationError(f"index (n={n}, f={f}) out of range")
    snr = snr_required(instance.format_set, q)
    if snr == 0.0:
        return 0.0
    return snr * instance.noise_power / float(instance.gains[n, f])


def candidate_set(
    instance: ProblemInstance, n: int, P: int, excluded: Iterable[int] = ()
) -> np.ndarray:
    """Indices of the ``P`` best non-excluded subchannels of user ``n``.

    Sorted by gain, descending; equal gains keep the lower index first.
    Returns fewer than ``P`` entries (possibly none) when the pool is short.
    """
    if P < 1:
        raise ConfigurationError("candidate size must be >= 1")
    excluded = set(int(f) for f in excluded)
    eligible = np.array(
        [f for f in range(instance.num_subchannels) if f not in excluded], dtype=int
    )
    if eligible.size == 0:
        return eligible
    order = np.argsort(-instance.gains[n, eligible], kind="stable")
    return eligible[order[:P]]


def _active(x) -> np.ndarray:
    x = np.asarray(x)
    return x >= 1


def exclusivity_cost(column: Sequence[int], neighborhood: Iterable[int] | None = None) -> float:
    """0 if at most one user of ``neighborhood`` transmits in ``column``, else inf."""
    column = np.asarray(column)
    if neighborhood is not None:
        column = column[list(neighborhood)]
    return 0.0 if int(_active(column).sum()) <= 1 else INF


def user_cost(
    instance: ProblemInstance, n: int, row: Sequence[int], subchannels: Sequence[int] | None = None
) -> float:
    """Power of user ``n`` if its rate and power constraints hold, else inf.

    ``row`` holds formats on ``subchannels`` (all subchannels by default).
    """
    row = np.asarray(row, dtype=int)
    if subchannels is None:
        subchannels = np.arange(instance.num_subchannels)
    subchannels = np.asarray(subchannels, dtype=int)
    if row.shape != subchannels.shape:
        raise ConfigurationError("row and subchannel list differ in length")
    Q = instance.format_set.num_formats
    if np.any(row < 0) or np.any(row > Q):
        raise ConfigurationError("format index out of range")
    if row.size == 0:
        power, units = 0.0, 0
    else:
        table = instance.power_table()[n]
        power = float(np.sum(table[subchannels, row]))
        units = int(row.sum())
    if units < instance.demand_units(n):
        return INF
    if power > instance.power_caps[n]:
        return INF
    return power


def validate_allocation(instance: ProblemInstance, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != (instance.num_users, instance.num_subchannels):
        raise ConfigurationError(
            f"allocation shape {x.shape} != {(instance.num_users, instance.num_subchannels)}"
        )
    if np.any(x < 0) or np.any(x > instance.format_set.num_formats):
        raise ConfigurationError("allocation entries must lie in 0..Q")
    return x.astype(int)


def global_cost(
    instance: ProblemInstance, candidate_sets: Sequence[Sequence[int]] | None, x: np.ndarray
) -> float:
    """Sum of exclusivity and user costs; finite value is the total power.

    With ``candidate_sets=None`` every subchannel is a candidate for every user.
    """
    x = validate_allocation(instance, x)
    N, F = x.shape
    if candidate_sets is not None:
        allowed = np.zeros((N, F), dtype=bool)
        for n, cands in enumerate(candidate_sets):
            allowed[n, list(cands)] = True
        if np.any(x[~allowed] != 0):
            return INF
    for f in range(F):
        if exclusivity_cost(x[:, f]) == INF:
            return INF
    total = 0.0
    for n in range(N):
        c = user_cost(instance, n, x[n])
        if c == INF:
            return INF
        total += c
    return total


def total_power(instance: ProblemInstance, x: np.ndarray) -> float:
    """Unconstrained objective: sum of transmit powers of allocation ``x``."""
    x = validate_allocation(instance, x)
    table = instance.power_table()
    n_idx, f_idx = np.indices(x.shape)
    return float(table[n_idx, f_idx, x].sum())


def user_powers(instance: ProblemInstance, x: np.ndarray) -> np.ndarray:
    x = validate_allocation(instance, x)
    table = instance.power_table()
    n_idx, f_idx = np.indices(x.shape)
    return table[n_idx, f_idx, x].sum(axis=1)


def user_rates(instance: ProblemInstance, x: np.ndarray) -> np.ndarray:
    """Achieved bit rate per user."""
    x = validate_allocation(instance, x)
    return instance.rate_unit * x.sum(axis=1)


def feasibility_violations(instance: ProblemInstance, x: np.ndarray, served=None) -> list:
    """Human-readable list of broken constraints; ``served`` limits the rate/power checks to those users."""
    x = validate_allocation(instance, x)
    problems = []
    shared = np.flatnonzero((x > 0).sum(axis=0) > 1)
    if shared.size:
        problems.append(f"subchannels used twice: {shared.tolist()}")
    served = np.ones(instance.num_users, dtype=bool) if served is None else np.asarray(served, dtype=bool)
    rates, powers = user_rates(instance, x), user_powers(instance, x)
    for n in np.flatnonzero(served):
        if rates[n] < instance.rate_demands[n] * (1 - 1e-12):
            problems.append(f"user {n} rate {rates[n]:g} < demand {instance.rate_demands[n]:g}")
        if powers[n] > instance.power_caps[n] * (1 + 1e-12):
            problems.append(f"user {n} power {powers[n]:g} > cap {instance.power_caps[n]:g}")
    return problems
