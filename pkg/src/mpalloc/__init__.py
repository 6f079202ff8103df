"""Distributed min-sum message-passing subchannel/format allocation for the OFDMA uplink."""
from .baselines import BaselineResult, brcg_allocate, fixed_format_assign
from .channel import ChannelParams, draw_user_gain_profile, generate_instance
from .dp import RestrictedProblem, dp_solve, dp_solve_relaxed, quantize_powers
from .mp import MPConfig, MPResult, run_mp
from .problem import (
    ConfigurationError,
    FormatSet,
    ProblemInstance,
    candidate_set,
    exclusivity_cost,
    feasibility_violations,
    global_cost,
    power_required,
    snr_required,
    user_cost,
)

__all__ = [
    "BaselineResult",
    "ChannelParams",
    "ConfigurationError",
    "FormatSet",
    "MPConfig",
    "MPResult",
    "ProblemInstance",
    "RestrictedProblem",
    "brcg_allocate",
    "candidate_set",
    "dp_solve",
    "dp_solve_relaxed",
    "draw_user_gain_profile",
    "exclusivity_cost",
    "feasibility_violations",
    "fixed_format_assign",
    "generate_instance",
    "global_cost",
    "power_required",
    "quantize_powers",
    "run_mp",
    "snr_required",
    "user_cost",
]
