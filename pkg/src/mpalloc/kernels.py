"""Compiled kernels computing every outgoing message of one user node at once.

The rate dimension is clipped at the demand ``D`` (row ``D`` reads ">= D"),
and the table over the candidates before and after each edge is combined, so
one pass serves all edges instead of one dynamic program per (edge, format).
"""
import numpy as np
from numba import njit

INF = np.inf


@njit(cache=True)
def _sweep_relaxed(costs, D, reverse):
    P, W = costs.shape
    tab = np.full((P + 1, D + 1), INF)
    start = P if reverse else 0
    tab[start, 0] = 0.0
    for s in range(P):
        if reverse:
            i = P - 1 - s
            src, dst = i + 1, i
        else:
            i = s
            src, dst = i, i + 1
        for d in range(D + 1):
            tab[dst, d] = tab[src, d] + costs[i, 0]
        for h in range(1, W):
            c = costs[i, h]
            if c == INF:
                continue
            for d in range(D + 1):
                v = tab[src, d]
                if v == INF:
                    continue
                t = d + h
                if t > D:
                    t = D
                if v + c < tab[dst, t]:
                    tab[dst, t] = v + c
    return tab


@njit(cache=True)
def w_messages_relaxed(powers, costs, D):
    P, W = costs.shape
    out = np.full((P, W), INF)
    pre = _sweep_relaxed(costs, D, False)
    suf = _sweep_relaxed(costs, D, True)
    g = np.empty(D + 1)
    for i in range(P):
        g[:] = INF
        for a in range(D + 1):
            va = pre[i, a]
            if va == INF:
                continue
            for b in range(D + 1):
                v = va + suf[i + 1, b]
                t = a + b
                if t > D:
                    t = D
                if v < g[t]:
                    g[t] = v
        for t in range(D - 1, -1, -1):
            if g[t + 1] < g[t]:
                g[t] = g[t + 1]
        for q in range(W):
            dm = D - q
            if dm < 0:
                dm = 0
            out[i, q] = powers[i, q] + g[dm]
    return out


@njit(cache=True)
def _sweep_budgeted(costs, units, D, K, reverse):
    P, W = costs.shape
    tab = np.full((P + 1, D + 1, K + 1), INF)
    start = P if reverse else 0
    tab[start, 0, :] = 0.0
    for s in range(P):
        if reverse:
            i = P - 1 - s
            src, dst = i + 1, i
        else:
            i = s
            src, dst = i, i + 1
        for d in range(D + 1):
            for k in range(K + 1):
                tab[dst, d, k] = tab[src, d, k] + costs[i, 0]
        for h in range(1, W):
            c = costs[i, h]
            w = units[i, h]
            if c == INF or w > K:
                continue
            for d in range(D + 1):
                t = d + h
                if t > D:
                    t = D
                for k in range(w, K + 1):
                    v = tab[src, d, k - w]
                    if v + c < tab[dst, t, k]:
                        tab[dst, t, k] = v + c
    return tab


@njit(cache=True)
def w_messages_budgeted(powers, costs, units, budgets, D, K):
    """``budgets[i, q] < 0`` marks a format whose own power already breaks the cap."""
    P, W = costs.shape
    out = np.full((P, W), INF)
    pre = _sweep_budgeted(costs, units, D, K, False)
    suf = _sweep_budgeted(costs, units, D, K, True)
    tail = np.empty((D + 1, K + 1))
    for i in range(P):
        # tail[b, k]: cheapest suffix with rate >= b and power <= k
        for k in range(K + 1):
            tail[D, k] = suf[i + 1, D, k]
        for b in range(D - 1, -1, -1):
            for k in range(K + 1):
                v = suf[i + 1, b, k]
                tail[b, k] = v if v < tail[b + 1, k] else tail[b + 1, k]
        for q in range(W):
            alpha = budgets[i, q]
            if alpha < 0:
                continue
            dm = D - q
            if dm < 0:
                dm = 0
            best = INF
            for a in range(D + 1):
                rb = dm - a
                if rb < 0:
                    rb = 0
                for k1 in range(alpha + 1):
                    v = pre[i, a, k1]
                    if v == INF:
                        continue
                    v = v + tail[rb, alpha - k1]
                    if v < best:
                        best = v
            out[i, q] = powers[i, q] + best
    return out
