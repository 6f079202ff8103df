"""Single-cell uplink channel: hexagonal placement, path loss, multipath Rayleigh fading."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .problem import ConfigurationError, FormatSet, ProblemInstance


@dataclass(frozen=True)
class ChannelParams:
    cell_radius_m: float = 500.0
    bandwidth_hz: float = 5e6
    num_subchannels: int = 32
    path_loss_exponent: float = 4.0
    delay_spread_s: float = 0.5e-6
    sample_time_s: float = 200e-9
    # B * N0 = 1 with the default 32 subchannels over 5 MHz
    noise_psd: float = 32 / 5e6
    min_user_distance_m: float = 10.0

    def __post_init__(self):
        for name in (
            "cell_radius_m",
            "bandwidth_hz",
            "path_loss_exponent",
            "delay_spread_s",
            "sample_time_s",
            "noise_psd",
            "min_user_distance_m",
        ):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ConfigurationError(f"{name} must be positive and finite, got {value}")
        if self.num_subchannels < 1:
            raise ConfigurationError("num_subchannels must be >= 1")
        if self.min_user_distance_m >= self.cell_radius_m:
            raise ConfigurationError("min_user_distance_m must be below cell_radius_m")
        if self.num_taps < 1:
            raise ConfigurationError(
                f"delay spread {self.delay_spread_s} s gives no channel taps "
                f"at sample time {self.sample_time_s} s"
            )

    @property
    def normalized_delay_spread(self) -> float:
        return self.delay_spread_s / self.sample_time_s

    @property
    def num_taps(self) -> int:
        # slack: with a 2.6 us spread, 3 * sigma_n evaluates to 38.999... and would floor to 38
        return int(math.floor(3.0 * self.normalized_delay_spread + 1e-9))

    @property
    def subchannel_bandwidth(self) -> float:
        return self.bandwidth_hz / self.num_subchannels


def tap_variances(params: ChannelParams) -> np.ndarray:
    """Exponential power-delay profile over taps ``j = 1..N_j``, summing to 1."""
    j = np.arange(1, params.num_taps + 1, dtype=float)
    profile = np.exp(-j / params.normalized_delay_spread)
    return profile / profile.sum()


def sample_hexagon(radius: float, min_distance: float, rng: np.random.Generator) -> tuple[float, float]:
    """Uniform point in a hexagon with circumradius ``radius``, at least ``min_distance`` from the center."""
    half_height = math.sqrt(3.0) / 2.0 * radius
    while True:
        x = rng.uniform(-radius, radius)
        y = rng.uniform(-half_height, half_height)
        if math.sqrt(3.0) * abs(x) + abs(y) > math.sqrt(3.0) * radius:
            continue
        if math.hypot(x, y) < min_distance:
            continue
        return x, y


def path_loss_gain(params: ChannelParams, distance: float) -> float:
    """Relative path-loss gain ``(d / R) ** -alpha``; equals 1 at the cell edge."""
    return (distance / params.cell_radius_m) ** (-params.path_loss_exponent)


def frequency_response(taps: np.ndarray, num_subchannels: int) -> np.ndarray:
    """Tap response evaluated at the subchannel center frequencies."""
    j = np.arange(1, taps.size + 1)
    centers = (np.arange(num_subchannels) + 0.5) / num_subchannels
    phase = np.exp(-2j * np.pi * np.outer(centers, j))
    return phase @ taps


def fading_gains(params: ChannelParams, rng: np.random.Generator) -> np.ndarray:
    """``|response|^2`` of one Rayleigh multipath realization, unit mean power."""
    var = tap_variances(params)
    taps = np.sqrt(var / 2.0) * (
        rng.standard_normal(var.size) + 1j * rng.standard_normal(var.size)
    )
    return np.abs(frequency_response(taps, params.num_subchannels)) ** 2


def draw_user_gain_profile(params: ChannelParams, rng: np.random.Generator) -> np.ndarray:
    """Per-subchannel power gains ``|H_{n,f}|^2`` of one user, path loss included."""
    x, y = sample_hexagon(params.cell_radius_m, params.min_user_distance_m, rng)
    g_pl = path_loss_gain(params, math.hypot(x, y))
    return g_pl * fading_gains(params, rng)


def generate_instance(
    params: ChannelParams,
    num_users: int,
    format_set: FormatSet,
    rate_demands,
    power_caps,
    seed: int,
) -> ProblemInstance:
    """Draw a full problem instance; a pure function of its arguments."""
    if num_users < 1:
        raise ConfigurationError("num_users must be >= 1")
    rate_demands = np.asarray(rate_demands, dtype=float).reshape(-1)
    power_caps = np.asarray(power_caps, dtype=float).reshape(-1)
    if rate_demands.size != num_users or power_caps.size != num_users:
        raise ConfigurationError(
            f"expected {num_users} rate demands and power caps, "
            f"got {rate_demands.size} and {power_caps.size}"
        )
    rng = np.random.default_rng(seed)
    gains = np.vstack([draw_user_gain_profile(params, rng) for _ in range(num_users)])
    # gains can underflow to 0 only on a measure-zero event; keep the invariant anyway
    gains = np.maximum(gains, np.finfo(float).tiny)
    return ProblemInstance(
        gains=gains,
        rate_demands=rate_demands,
        power_caps=power_caps,
        format_set=format_set,
        subchannel_bandwidth=params.subchannel_bandwidth,
        noise_psd=params.noise_psd,
    )
