"""Brute-force reference implementations used as test oracles.

Everything here is written from the chain definitions with plain loops over
``itertools.product``; none of it calls into the package's matrix builders.
"""

from __future__ import annotations

from itertools import combinations, product
from math import comb, prod

import numpy as np


def weight(edges, beta, gamma, fields, sigma) -> float:
    w = 1.0
    for u, v in edges:
        if sigma[u] == sigma[v] == 1:
            w *= beta
        elif sigma[u] == sigma[v] == -1:
            w *= gamma
    for v, s in enumerate(sigma):
        if s == 1:
            w *= fields[v]
    return w


def gibbs(n, edges, beta, gamma, fields) -> dict[tuple, float]:
    """Feasible states (lexicographic, -1 < +1) mapped to probabilities."""
    ws = {s: weight(edges, beta, gamma, fields, s) for s in product((-1, 1), repeat=n)}
    Z = sum(ws.values())
    return {s: w / Z for s, w in ws.items() if w > 0}


def conditional(mu: dict, fixed: dict) -> dict:
    keep = {s: p for s, p in mu.items() if all(s[v] == c for v, c in fixed.items())}
    Z = sum(keep.values())
    return {s: p / Z for s, p in keep.items()}


def resample(mu: dict, sigma: tuple, S) -> dict:
    """Law of the state after resampling block ``S`` of ``sigma`` from ``mu``."""
    fixed = {v: sigma[v] for v in range(len(sigma)) if v not in S}
    return conditional(mu, fixed)


def matrix(mu: dict, rows: dict[tuple, dict]) -> np.ndarray:
    states = list(mu)
    idx = {s: i for i, s in enumerate(states)}
    P = np.zeros((len(states), len(states)))
    for s, row in rows.items():
        for t, p in row.items():
            P[idx[s], idx[t]] += p
    return P


def glauber(mu: dict, n: int) -> np.ndarray:
    rows = {}
    for s in mu:
        row: dict = {}
        for v in range(n):
            for t, p in resample(mu, s, {v}).items():
                row[t] = row.get(t, 0.0) + p / n
        rows[s] = row
    return matrix(mu, rows)


def block(mu: dict, n: int, ell: int) -> np.ndarray:
    subsets = list(combinations(range(n), ell))
    rows = {}
    for s in mu:
        row: dict = {}
        for S in subsets:
            for t, p in resample(mu, s, set(S)).items():
                row[t] = row.get(t, 0.0) + p / len(subsets)
        rows[s] = row
    return matrix(mu, rows)


def field(n, edges, beta, gamma, fields, theta) -> np.ndarray:
    """Field dynamics by enumerating every selected set S explicitly."""
    mu = gibbs(n, edges, beta, gamma, fields)
    pi = gibbs(n, edges, beta, gamma, [f * theta for f in fields])
    rows = {}
    for s in mu:
        plus = [v for v in range(n) if s[v] == 1]
        row: dict = {}
        for keep in product((0, 1), repeat=len(plus)):
            S = {v for v in range(n) if s[v] == -1}
            p_sel = 1.0
            for v, k in zip(plus, keep):
                if k:
                    S.add(v)
                    p_sel *= theta
                else:
                    p_sel *= 1 - theta
            for t, p in resample(pi, s, S).items():
                row[t] = row.get(t, 0.0) + p_sel * p
        rows[s] = row
    return matrix(mu, rows)


def hardcore_field(n, edges, lam, theta) -> np.ndarray:
    """Hardcore field dynamics: keep unselected occupied vertices, resample the rest at fugacity theta*lam."""
    mu = gibbs(n, edges, 0.0, 1.0, [lam] * n)
    adj = {v: set() for v in range(n)}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    rows = {}
    for s in mu:
        occ = [v for v in range(n) if s[v] == 1]
        row: dict = {}
        for keep in product((0, 1), repeat=len(occ)):
            p_sel = prod(theta if k else 1 - theta for k in keep)
            kept = {v for v, k in zip(occ, keep) if not k}
            blocked = set().union(*(adj[v] for v in kept)) if kept else set()
            free = [v for v in range(n) if v not in kept and v not in blocked]
            sub_edges = [(u, v) for u, v in edges if u in free and v in free]
            loc = {v: i for i, v in enumerate(free)}
            sub = gibbs(len(free), [(loc[u], loc[v]) for u, v in sub_edges], 0.0, 1.0, [theta * lam] * len(free))
            for conf, p in sub.items():
                t = [-1] * n
                for v in kept:
                    t[v] = 1
                for v in free:
                    t[v] = conf[loc[v]]
                t = tuple(t)
                row[t] = row.get(t, 0.0) + p_sel * p
        rows[s] = row
    return matrix(mu, rows)


def k_lift(mu: dict, n: int, k: int) -> dict:
    """Law of the k-transformation over ``n*k`` copies, copy ``(v, i)`` at ``v*k + i``."""
    out: dict = {}
    for s, p in mu.items():
        plus = [v for v in range(n) if s[v] == 1]
        for choice in product(range(k), repeat=len(plus)):
            y = [-1] * (n * k)
            for v, i in zip(plus, choice):
                y[v * k + i] = 1
            out[tuple(y)] = out.get(tuple(y), 0.0) + p / k ** len(plus)
    return dict(sorted(out.items()))


def project(y: tuple, n: int, k: int) -> tuple:
    return tuple(1 if any(y[v * k + i] == 1 for i in range(k)) else -1 for v in range(n))


def projected_block(mu: dict, n: int, k: int, ell: int) -> np.ndarray:
    """Lift uniformly, run one ell-block step on the lift, project back."""
    lifted = k_lift(mu, n, k)
    nk = n * k
    subsets = list(combinations(range(nk), ell))
    rows: dict = {s: {} for s in mu}
    for y, py in lifted.items():
        s = project(y, n, k)
        share = py / mu[s]
        for S in subsets:
            for y2, p in resample(lifted, y, set(S)).items():
                t = project(y2, n, k)
                rows[s][t] = rows[s].get(t, 0.0) + share * p / len(subsets)
    return matrix(mu, rows)


def hypergeo(n: int, k: int, ell: int) -> dict[tuple, float]:
    out = {}
    for a in product(range(k + 1), repeat=n):
        if sum(a) == ell:
            out[a] = prod(comb(k, x) for x in a) / comb(n * k, ell)
    return out


def tree_root_plus(n, edges, beta, gamma, fields, pins: dict, root: int = 0) -> float:
    """``P(root = +1)`` on a small tree with pinned nodes, by enumeration."""
    mu = conditional(gibbs(n, edges, beta, gamma, fields), pins)
    return sum(p for s, p in mu.items() if s[root] == 1)


def signed_influence(mu: dict, r: int, u: int) -> float:
    plus = conditional(mu, {r: 1})
    minus = conditional(mu, {r: -1})
    return sum(p for s, p in plus.items() if s[u] == 1) - sum(p for s, p in minus.items() if s[u] == 1)
