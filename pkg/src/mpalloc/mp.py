"""Min-sum message passing over the allocation factor graph.

Variable nodes ``x[n, f]`` (format of user ``n`` on subchannel ``f``) sit
between one exclusivity node per subchannel (at the base station) and one
rate/power node per user (at the terminal). Every variable node has degree
two, so forwarding is a plain copy: the message a variable sends to its
subchannel node is the one it just received from its user node and vice versa.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dp import DEFAULT_RESOLUTION, RestrictedProblem, dp_solve, dp_solve_relaxed, quantize_powers
from .kernels import w_messages_budgeted, w_messages_relaxed
from .problem import INF, ConfigurationError, ProblemInstance, candidate_set

FULFILLED = "fulfilled"
OUTAGE = "outage"


@dataclass
class MPConfig:
    inner_iterations: int = 100
    max_outer_cycles: int = 10
    candidate_size: int = 24
    normalization: bool = True
    damping: float = 0.0
    power_resolution: int = DEFAULT_RESOLUTION
    # "fast": prefix/suffix tables; "dp": one dp_solve per (edge, format)
    w_solver: str = "fast"
    # stop the inner rounds early once messages repeat exactly (a fixed point)
    stop_at_fixed_point: bool = True

    def __post_init__(self):
        if self.inner_iterations < 1:
            raise ConfigurationError("inner_iterations must be >= 1")
        if self.max_outer_cycles < 1:
            raise ConfigurationError("max_outer_cycles must be >= 1")
        if self.candidate_size < 1:
            raise ConfigurationError("candidate_size must be >= 1")
        if not 0.0 <= self.damping < 1.0:
            raise ConfigurationError("damping must lie in [0, 1)")
        if self.w_solver not in ("fast", "dp"):
            raise ConfigurationError(f"unknown w_solver {self.w_solver!r}")


@dataclass
class MPResult:
    allocation: np.ndarray
    status: list
    total_power: float
    outer_cycles_used: int
    user_power: np.ndarray = field(default=None)

    @property
    def all_fulfilled(self) -> bool:
        return all(s == FULFILLED for s in self.status)

    @property
    def outage(self) -> np.ndarray:
        return np.array([s == OUTAGE for s in self.status])


@dataclass
class Claim:
    user: int
    subchannel: int
    q: int
    margin: float


# --- message primitives ---


def normalize(message: np.ndarray) -> np.ndarray:
    """Shift so the smallest finite entry is 0; an all-infinite message is returned as is."""
    message = np.asarray(message, dtype=float)
    finite = message[np.isfinite(message)]
    if finite.size == 0:
        return message.copy()
    return message - finite.min()


def is_infeasible(message: np.ndarray) -> bool:
    return not np.any(np.isfinite(message))


def damp(computed: np.ndarray, previous: np.ndarray | None, factor: float) -> np.ndarray:
    if factor == 0.0 or previous is None:
        return computed
    both = np.isfinite(computed) & np.isfinite(previous)
    out = computed.copy()
    out[both] = (1.0 - factor) * computed[both] + factor * previous[both]
    return out


def c_node_update(incoming: np.ndarray, target: int) -> np.ndarray:
    """Exclusivity-node message to neighbor ``target``.

    With the others' silence costs summed as ``S``: every transmitting format
    of the target forces the others silent (cost ``S``); silence of the target
    lets at most one other neighbor transmit at its cheapest format.
    """
    incoming = np.atleast_2d(np.asarray(incoming, dtype=float))
    K, width = incoming.shape
    out = np.zeros(width)
    if K == 1:
        return out
    zeros = incoming[:, 0]
    best_tx = incoming[:, 1:].min(axis=1) if width > 1 else np.full(K, INF)
    others = [k for k in range(K) if k != target]
    silent = 0.0
    for k in others:
        silent += zeros[k]
    out[1:] = silent
    best0 = silent
    for k in others:
        rest = 0.0
        for m in others:
            if m != k:
                rest += zeros[m]
        best0 = min(best0, rest + best_tx[k])
    out[0] = best0
    return out


def c_node_messages(incoming: np.ndarray) -> np.ndarray:
    """All outgoing messages of one exclusivity node, row ``k`` for neighbor ``k``."""
    incoming = np.atleast_2d(np.asarray(incoming, dtype=float))
    K, width = incoming.shape
    out = np.zeros((K, width))
    if K == 1:
        return out
    zeros = incoming[:, 0]
    best_tx = incoming[:, 1:].min(axis=1)
    inf0 = ~np.isfinite(zeros)
    fin0 = np.where(inf0, 0.0, zeros)
    n_inf = int(inf0.sum())
    total = float(fin0.sum())
    # all-but-j silence cost
    cnt_j = n_inf - inf0
    silent = np.where(cnt_j > 0, INF, total - fin0)
    # all-but-{j,k} silence cost plus k's cheapest transmission
    cnt_jk = n_inf - inf0[:, None] - inf0[None, :]
    rest = np.where(cnt_jk > 0, INF, total - fin0[:, None] - fin0[None, :])
    alt = rest + best_tx[None, :]
    np.fill_diagonal(alt, INF)
    out[:, 1:] = silent[:, None]
    out[:, 0] = np.minimum(silent, alt.min(axis=1))
    return out


# --- user (W) node ---


def _quantized_user(powers: np.ndarray, power_cap: float, resolution: int):
    """Integer powers, grid unit and per-(edge, format) budgets for one user node."""
    units, _ = quantize_powers(powers, power_cap, resolution)
    if power_cap > 0:
        unit = power_cap / resolution
        slack = np.floor((power_cap - powers) / unit)
        budgets = np.where(powers <= power_cap, np.clip(slack, 0, resolution), -1).astype(np.int64)
    else:
        budgets = np.where(powers <= 0, 0, -1).astype(np.int64)
    return units, budgets


def w_node_update(
    powers: np.ndarray,
    incoming: np.ndarray,
    target: int,
    demand_units: int,
    power_cap: float = INF,
    resolution: int = DEFAULT_RESOLUTION,
) -> np.ndarray:
    """User-node message to edge ``target`` by one :func:`dp_solve` per format.

    ``powers[i, h]`` is the power of format ``h`` on the user's ``i``-th
    candidate, ``incoming`` the variable-to-node messages on the same edges.
    """
    powers = np.asarray(powers, dtype=float)
    incoming = np.asarray(incoming, dtype=float)
    P, width = powers.shape
    keep = [i for i in range(P) if i != target]
    costs = powers[keep] + incoming[keep]
    capped = power_cap != INF
    if capped:
        units, budgets = _quantized_user(powers, power_cap, resolution)
    out = np.full(width, INF)
    for q in range(width):
        d_min = max(0, demand_units - q)
        if capped:
            if budgets[target, q] < 0:
                continue
            problem = RestrictedProblem(costs, d_min, units[keep], int(budgets[target, q]))
            value, _ = dp_solve(problem)
        else:
            value, _ = dp_solve_relaxed(RestrictedProblem(costs, d_min))
        out[q] = powers[target, q] + value
    return out


def w_node_messages(
    powers: np.ndarray,
    incoming: np.ndarray,
    demand_units: int,
    power_cap: float = INF,
    resolution: int = DEFAULT_RESOLUTION,
) -> np.ndarray:
    """Every outgoing message of one user node, row ``i`` for edge ``i``.

    Equivalent to calling :func:`w_node_update` for each edge, but shares
    prefix/suffix tables (rate clipped at ``demand_units``) across edges;
    see :mod:`mpalloc.kernels`.
    """
    powers = np.asarray(powers, dtype=float)
    incoming = np.asarray(incoming, dtype=float)
    P, width = powers.shape
    out = np.full((P, width), INF)
    if P == 0:
        return out
    Q = width - 1
    D = int(demand_units)
    if D > Q * P:
        return out
    costs = powers + incoming
    if power_cap == INF:
        return w_messages_relaxed(powers, costs, D)
    units, budgets = _quantized_user(powers, power_cap, resolution)
    K = int(max(budgets.max(), 0))
    return w_messages_budgeted(powers, costs, units, budgets, D, K)


# --- iteration state ---


@dataclass
class EdgeState:
    """Messages on the edges of the active users, one ``(P_n, Q+1)`` array per user."""

    users: list
    candidates: dict
    powers: dict
    demand_units: dict
    power_caps: dict
    m_vw: dict
    m_wv: dict
    m_vc: dict
    m_cv: dict
    neighbors: dict

    @classmethod
    def build(cls, instance: ProblemInstance, candidates: dict, demand_units: dict, power_caps: dict):
        table = instance.power_table()
        width = instance.format_set.num_formats + 1
        users = sorted(candidates)
        neighbors: dict = {}
        for n in users:
            for i, f in enumerate(candidates[n]):
                neighbors.setdefault(int(f), []).append((n, i))
        zero = {n: np.zeros((len(candidates[n]), width)) for n in users}
        return cls(
            users=users,
            candidates={n: np.asarray(candidates[n], dtype=int) for n in users},
            powers={n: table[n, candidates[n]] for n in users},
            demand_units=dict(demand_units),
            power_caps=dict(power_caps),
            m_vw=zero,
            m_wv={n: np.zeros_like(zero[n]) for n in users},
            m_vc={n: np.zeros_like(zero[n]) for n in users},
            m_cv={n: np.zeros_like(zero[n]) for n in users},
            neighbors=dict(sorted(neighbors.items())),
        )

    def beliefs(self) -> dict:
        return {n: self.m_cv[n] + self.m_wv[n] for n in self.users}


def _w_update_one(args):
    powers, incoming, demand, cap, config = args
    if config.w_solver == "dp":
        rows = [
            w_node_update(powers, incoming, i, demand, cap, config.power_resolution)
            for i in range(powers.shape[0])
        ]
        return np.array(rows).reshape(powers.shape)
    return w_node_messages(powers, incoming, demand, cap, config.power_resolution)


def run_inner_rounds(
    state: EdgeState,
    iterations: int,
    config: MPConfig | None = None,
    trace: Callable | None = None,
    cycle: int = 0,
    executor=None,
) -> dict:
    """Flooding schedule: all user nodes, forward, all subchannel nodes, forward back.

    Every half-round reads only messages written in the previous half-round.
    Returns the beliefs ``m_cv + m_wv`` per user.
    """
    config = config or MPConfig()
    for it in range(iterations):
        old_wv, old_cv = state.m_wv, state.m_cv
        jobs = [
            (state.powers[n], state.m_vw[n], state.demand_units[n], state.power_caps[n], config)
            for n in state.users
        ]
        results = list(executor.map(_w_update_one, jobs)) if executor else [_w_update_one(j) for j in jobs]
        new_wv = {}
        for n, msgs in zip(state.users, results):
            if config.normalization:
                msgs = np.array([normalize(m) for m in msgs]).reshape(msgs.shape)
            new_wv[n] = damp(msgs, state.m_wv[n] if it else None, config.damping)
        state.m_wv = new_wv
        state.m_vc = {n: state.m_wv[n].copy() for n in state.users}

        new_cv = {n: np.zeros_like(state.m_cv[n]) for n in state.users}
        for f, nbrs in state.neighbors.items():
            incoming = np.array([state.m_vc[n][i] for n, i in nbrs])
            outgoing = c_node_messages(incoming)
            for (n, i), msg in zip(nbrs, outgoing):
                if config.normalization:
                    msg = normalize(msg)
                new_cv[n][i] = damp(msg, state.m_cv[n][i] if it else None, config.damping)
        state.m_cv = new_cv
        state.m_vw = {n: state.m_cv[n].copy() for n in state.users}
        if trace is not None:
            trace(_trace_record(state, cycle, it))
        if config.stop_at_fixed_point and it and _same(old_wv, state.m_wv) and _same(old_cv, state.m_cv):
            break
    return state.beliefs()


def _same(a: dict, b: dict) -> bool:
    return all(np.array_equal(a[n], b[n]) for n in b)


def _encode(values: np.ndarray) -> list:
    return [None if not math.isfinite(v) else float(v) for v in values]


def _trace_record(state: EdgeState, cycle: int, round_index: int) -> dict:
    edges = []
    for n in state.users:
        for i, f in enumerate(state.candidates[n]):
            edges.append(
                {
                    "user": int(n),
                    "subchannel": int(f),
                    "m_wv": _encode(state.m_wv[n][i]),
                    "m_cv": _encode(state.m_cv[n][i]),
                }
            )
    return {"cycle": cycle, "round": round_index, "edges": edges}


# --- decisions ---


def _margin(row: np.ndarray) -> float:
    if row.size < 2:
        return INF
    lo, second = np.partition(row, 1)[:2]
    if lo == INF:
        return 0.0
    return float(second - lo)


def decide_and_peel(beliefs: dict, state: EdgeState) -> list:
    """Per-edge argmin of the beliefs (ties toward the lower format); nonzero choices are claims.

    A user drops its weakest claims if together they would exceed its
    remaining power cap.
    """
    claims = []
    for n in state.users:
        b = beliefs[n]
        mine = []
        for i, f in enumerate(state.candidates[n]):
            row = b[i]
            if not np.any(np.isfinite(row)):
                continue
            q = int(np.argmin(row))
            if q > 0:
                mine.append(Claim(int(n), int(f), q, _margin(row)))
        claims.extend(_fit_power(mine, state, n))
    return claims


def _fit_power(claims: list, state: EdgeState, n: int) -> list:
    cap = state.power_caps[n]
    if cap == INF or not claims:
        return claims
    index = {int(f): i for i, f in enumerate(state.candidates[n])}
    ordered = sorted(claims, key=lambda c: (-c.margin, c.subchannel))
    kept, spent = [], 0.0
    for c in ordered:
        p = state.powers[n][index[c.subchannel], c.q]
        if spent + p <= cap:
            kept.append(c)
            spent += p
    return sorted(kept, key=lambda c: c.subchannel)


def bs_arbitrate(claims: Sequence[Claim]):
    """Grant one claimant per subchannel: the largest margin, then the lowest user index."""
    by_channel: dict = {}
    for c in claims:
        by_channel.setdefault(c.subchannel, []).append(c)
    granted, rejected = [], []
    for f in sorted(by_channel):
        group = sorted(by_channel[f], key=lambda c: (-c.margin, c.user))
        granted.append(group[0])
        rejected.extend(group[1:])
    return granted, rejected


def _standalone(state: EdgeState, config: MPConfig) -> dict:
    """User-node messages with silent neighbors: what each user wants ignoring everyone else."""
    return {
        n: _w_update_one(
            (state.powers[n], np.zeros_like(state.powers[n]), state.demand_units[n], state.power_caps[n], config)
        )
        for n in state.users
    }


def _fallback_claims(state: EdgeState, solo: dict) -> list:
    """Claims from each user's standalone preferences, used when a cycle grants nothing."""
    claims = []
    for n in state.users:
        mine = []
        for i, f in enumerate(state.candidates[n]):
            row = solo[n][i]
            if not np.any(np.isfinite(row)):
                continue
            q = int(np.argmin(row))
            if q > 0:
                mine.append(Claim(int(n), int(f), q, _margin(row)))
        claims.extend(_fit_power(mine, state, n))
    return claims


def run_mp(
    instance: ProblemInstance,
    config: MPConfig | None = None,
    trace: Callable | None = None,
    executor=None,
) -> MPResult:
    """Outer peeling loop around the inner message-passing rounds."""
    config = config or MPConfig()
    N, F = instance.num_users, instance.num_subchannels
    Q = instance.format_set.num_formats
    table = instance.power_table()
    x = np.zeros((N, F), dtype=int)
    excluded: set = set()
    residual = {n: instance.demand_units(n) for n in range(N)}
    cap = {n: float(instance.power_caps[n]) for n in range(N)}
    status = [FULFILLED if residual[n] == 0 else "active" for n in range(N)]

    cycles = 0
    while cycles < config.max_outer_cycles:
        active = [n for n in range(N) if status[n] == "active"]
        if not active:
            break
        cycles += 1
        size = {n: config.candidate_size for n in active}
        while True:
            candidates = {}
            for n in active:
                if status[n] != "active":
                    continue
                cands = candidate_set(instance, n, size[n], excluded)
                if cands.size == 0 or Q * cands.size < residual[n]:
                    status[n] = OUTAGE
                else:
                    candidates[n] = cands
            if not candidates:
                break
            state = EdgeState.build(
                instance, candidates, {n: residual[n] for n in candidates}, {n: cap[n] for n in candidates}
            )
            solo = _standalone(state, config)
            beliefs = run_inner_rounds(
                state, config.inner_iterations, config, trace=trace, cycle=cycles, executor=executor
            )
            collided = []
            for n in state.users:
                if all(is_infeasible(row) for row in solo[n]):
                    status[n] = OUTAGE
                elif all(is_infeasible(row) for row in beliefs[n]):
                    # infinities from colliding neighbors, not from the user itself
                    collided.append(n)
            free = F - len(excluded)
            grow = [n for n in collided if size[n] < free]
            if not grow:
                for n in collided:
                    beliefs[n] = solo[n]
                break
            # let colliding users see where else they could go
            for n in grow:
                size[n] = min(free, size[n] + config.candidate_size)
        if not candidates:
            break
        live = [n for n in state.users if status[n] == "active"]
        state.users = live
        claims = decide_and_peel(beliefs, state)
        granted, _ = bs_arbitrate(claims)
        if not granted:
            granted, _ = bs_arbitrate(_fallback_claims(state, solo))
        for c in granted:
            x[c.user, c.subchannel] = c.q
            excluded.add(c.subchannel)
            residual[c.user] = max(0, residual[c.user] - c.q)
            cap[c.user] = max(0.0, cap[c.user] - table[c.user, c.subchannel, c.q])
        for n in live:
            if residual[n] == 0:
                status[n] = FULFILLED
        if not granted:
            # nothing changes from here on; further cycles would repeat this one
            break

    status = [OUTAGE if s == "active" else s for s in status]
    n_idx, f_idx = np.indices(x.shape)
    per_user = table[n_idx, f_idx, x].sum(axis=1)
    return MPResult(
        allocation=x,
        status=status,
        total_power=float(per_user.sum()),
        outer_cycles_used=cycles,
        user_power=per_user,
    )
