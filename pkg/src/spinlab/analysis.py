"""Exact transition matrices, spectra and quadratic forms over the support."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .core import (
    MATRIX_CAP,
    GibbsTable,
    all_pinnings,
    bit,
    conditional_table,
    magnetize_table,
    partial_masses,
)
from .dynamics import DynamicsSpec, HyperGeoParams, hypergeo_pmf, hypergeo_support

SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    table: GibbsTable
    P: np.ndarray
    spec: DynamicsSpec

    @property
    def size(self) -> int:
        return self.P.shape[0]


@dataclass(frozen=True)
class SpectralReport:
    eigenvalues: np.ndarray
    gap: float
    abs_gap: float
    db_residual: float

    @property
    def lambda2(self) -> float:
        return float(self.eigenvalues[1]) if self.eigenvalues.size > 1 else 0.0


@dataclass(frozen=True)
class Check:
    name: str
    lhs: float
    rhs: float
    passed: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "pass": self.passed}


def ge_check(name: str, lhs: float, rhs: float, slack: float = SLACK) -> Check:
    return Check(name, float(lhs), float(rhs), bool(lhs >= rhs - slack))


def le_check(name: str, lhs: float, rhs: float, slack: float = SLACK) -> Check:
    return Check(name, float(lhs), float(rhs), bool(lhs <= rhs + slack))


# ---------------------------------------------------------------------------
# matrices


def _finish(P: np.ndarray) -> np.ndarray:
    np.fill_diagonal(P, 0.0)
    np.fill_diagonal(P, np.clip(1.0 - P.sum(axis=1), 0.0, None))
    return P


def glauber_matrix(table: GibbsTable, pick: str = "free") -> np.ndarray:
    n, N = table.n, table.size
    pool = table.free_vertices if pick == "free" else tuple(range(n))
    P = np.zeros((N, N))
    if not pool:
        return np.eye(N)
    free = set(table.free_vertices)
    idx = np.arange(N)
    for v in pool:
        if v not in free:
            continue
        j = table.position[table.codes ^ bit(v, n)]
        ok = j >= 0
        pi, pj = table.probs[ok], table.probs[j[ok]]
        P[idx[ok], j[ok]] += pj / (pi + pj) / len(pool)
    return _finish(P)


def block_matrix(table: GibbsTable, ell: int, pick: str = "free") -> np.ndarray:
    n, N = table.n, table.size
    pool = table.free_vertices if pick == "free" else tuple(range(n))
    if not 1 <= ell <= len(pool):
        raise ValueError("ell out of range")
    free_mask = sum(bit(v, n) for v in table.free_vertices)
    subsets = list(combinations(pool, ell))
    P = np.zeros((N, N))
    for S in subsets:
        smask = sum(bit(v, n) for v in S) & free_mask
        keys = table.codes & ~smask
        mass = np.bincount(keys, weights=table.probs, minlength=1 << n)
        agree = keys[:, None] == keys[None, :]
        P += agree * (table.probs[None, :] / mass[keys][:, None])
    return P / len(subsets)


def _superset_sums(full: np.ndarray, n: int) -> np.ndarray:
    """``out[R] = sum_{x superset of R} full[x]`` over bit masks."""
    arr = full.reshape((2,) * n).copy()
    for ax in range(n):
        lo = [slice(None)] * n
        hi = [slice(None)] * n
        lo[ax], hi[ax] = 0, 1
        arr[tuple(lo)] += arr[tuple(hi)]
    return arr.reshape(-1)


def _subset_sums(full: np.ndarray, n: int) -> np.ndarray:
    arr = full.reshape((2,) * n).copy()
    for ax in range(n):
        lo = [slice(None)] * n
        hi = [slice(None)] * n
        lo[ax], hi[ax] = 0, 1
        arr[tuple(hi)] += arr[tuple(lo)]
    return arr.reshape(-1)


def field_matrix(table: GibbsTable, theta: float) -> np.ndarray:
    """Closed form: sum over the unselected ``+1`` set ``R`` of both endpoints."""
    if not 0.0 < theta < 1.0:
        raise ValueError("theta must lie in (0,1)")
    n = table.n
    pi = magnetize_table(table, theta)
    free_mask = sum(bit(v, n) for v in table.free_vertices)
    masks = np.arange(1 << n)
    sizes = np.array([bin(int(m)).count("1") for m in masks])
    Pi = _superset_sums(pi.full_probs, n)
    w = np.zeros(1 << n)
    ok = (Pi > 0) & ((masks & ~free_mask) == 0)
    w[ok] = ((1.0 - theta) / theta) ** sizes[ok] / Pi[ok]
    g = _subset_sums(w, n)
    plus = table.codes & free_mask
    k = sizes[plus]
    A = plus[:, None] & plus[None, :]
    P = (theta ** k)[:, None] * pi.probs[None, :] * g[A]
    return P


def projected_matrix(table: GibbsTable, k: int, ell: int) -> np.ndarray:
    """Exact one-step law of the projected block chain (hypergeometric mixture)."""
    n, N = table.n, table.size
    params = HyperGeoParams(n, k, ell)
    free = table.free_vertices
    free_mask = sum(bit(v, n) for v in free)
    plus = table.states > 0
    mu = table.probs
    P = np.zeros((N, N))
    Rs = [r for r in range(1 << n) if r & ~free_mask == 0]
    for a in hypergeo_support(params):
        h = hypergeo_pmf(params, a)
        b = np.ones(n)
        for v in free:
            b[v] = a[v] / k
        for R in Rs:
            inR = np.array([bool(R & bit(v, n)) for v in range(n)])
            contains = (table.codes & R) == R
            if not contains.any():
                continue
            outside = plus & ~inR[None, :]
            fac_out = np.where(outside, b[None, :], 1.0).prod(axis=1)
            sel = np.where(contains, np.prod(1.0 - b[inR]) * fac_out, 0.0)
            res_w = np.where(contains, mu * fac_out, 0.0)
            tot = res_w.sum()
            if tot <= 0 or not sel.any():
                continue
            P += h * np.outer(sel, res_w / tot)
    return P


def transition_matrix(spec: DynamicsSpec, table: GibbsTable, cap: int = MATRIX_CAP) -> TransitionMatrix:
    if table.n > cap:
        raise ValueError(f"transition matrices capped at n <= {cap}")
    spec.check_against(table)
    if table.size == 1:
        return TransitionMatrix(table, np.ones((1, 1)), spec)
    if spec.kind == "glauber":
        P = glauber_matrix(table, spec.pick)
    elif spec.kind == "block":
        P = block_matrix(table, spec.ell, spec.pick)
    elif spec.kind == "field":
        if spec.inner_steps:
            raise ValueError("exact matrices cover exact resampling only")
        P = field_matrix(table, spec.theta)
    else:
        P = projected_matrix(table, spec.k, spec.ell)
    return TransitionMatrix(table, P, spec)


# ---------------------------------------------------------------------------
# spectra and forms


def detailed_balance_residual(P: TransitionMatrix) -> float:
    F = P.table.probs[:, None] * P.P
    return float(np.abs(F - F.T).max())


def stationarity_residual(P: TransitionMatrix) -> float:
    mu = P.table.probs
    return float(np.abs(mu @ P.P - mu).max())


def spectrum(P: TransitionMatrix) -> np.ndarray:
    s = np.sqrt(P.table.probs)
    A = s[:, None] * P.P / s[None, :]
    A = 0.5 * (A + A.T)
    return np.sort(np.linalg.eigvalsh(A))[::-1]


def spectral_report(P: TransitionMatrix, tol: float = 1e-8) -> SpectralReport:
    res = detailed_balance_residual(P)
    if res > tol:
        raise ValueError(f"chain is not reversible (residual {res:.3g})")
    if P.size == 1:
        return SpectralReport(np.ones(1), 1.0, 1.0, res)
    ev = spectrum(P)
    lam_star = max(abs(ev[1]), abs(ev[-1]))
    return SpectralReport(ev, float(1.0 - ev[1]), float(1.0 - lam_star), res)


def gap(P: TransitionMatrix) -> float:
    return spectral_report(P).gap


@dataclass(frozen=True)
class Functionals:
    variance: float
    dirichlet: float
    dirichlet_pairs: float


def chain_functionals(P: TransitionMatrix, f: Sequence[float]) -> Functionals:
    f = np.asarray(f, dtype=float)
    mu = P.table.probs
    if f.shape != mu.shape:
        raise ValueError("observable length must equal the support size")
    mean = mu @ f
    var = float(mu @ (f - mean) ** 2)
    dirichlet = float(mu @ (f * (f - P.P @ f)))
    diff = (f[:, None] - f[None, :]) ** 2
    pairs = float(0.5 * np.sum(mu[:, None] * P.P * diff))
    return Functionals(var, dirichlet, pairs)


def glauber_gap(table: GibbsTable, pick: str = "all") -> float:
    if table.size == 1:
        return 1.0
    return spectral_report(TransitionMatrix(table, glauber_matrix(table, pick), DynamicsSpec.glauber(pick))).gap


@dataclass(frozen=True)
class MinGap:
    value: float
    witness: dict
    pinnings: int


def min_gap(table: GibbsTable, pick: str = "all", cap: int = 8) -> MinGap:
    """Smallest Glauber gap over every feasible pinning (``1`` for singletons).

    ``pick='all'`` lets the chain select pinned vertices too (which then stay
    put); ``pick='free'`` restricts the choice to unpinned vertices.
    """
    n = table.n
    if n > cap:
        raise ValueError(f"pinning sweep capped at n <= {cap}")
    masses = partial_masses(table)
    best, witness, count = math.inf, {}, 0
    for idx, pin in enumerate(all_pinnings(n)):
        if masses[idx] <= 0:
            continue
        count += 1
        cond = conditional_table(table, pin)
        g = glauber_gap(cond, pick)
        if g < best:
            best, witness = g, pin.as_dict()
    return MinGap(float(best), witness, count)


def tensorization_constant(table: GibbsTable) -> float:
    if table.size < 2:
        raise ValueError("trivial support has no tensorization constant")
    return 1.0 / (table.n * glauber_gap(table, "all"))


def local_variance_sum(table: GibbsTable, f: Sequence[float]) -> float:
    """``sum_v E[Var_v f]`` with ``Var_v`` the variance of ``f`` under the
    single-site conditional at ``v``."""
    f = np.asarray(f, dtype=float)
    total = 0.0
    for v in table.free_vertices:
        j = table.position[table.codes ^ bit(v, table.n)]
        ok = j >= 0
        pi, pj = table.probs[ok], table.probs[j[ok]]
        qi = pi / (pi + pj)
        total += float(np.sum(pi * qi * (1 - qi) * (f[ok] - f[j[ok]]) ** 2))
    return total


def tensorization_holds(table: GibbsTable, C: float, f: Sequence[float], slack: float = 1e-12) -> bool:
    f = np.asarray(f, dtype=float)
    mu = table.probs
    var = float(mu @ (f - mu @ f) ** 2)
    return var <= C * local_variance_sum(table, f) + slack


def mixing_time_bound(gap_abs: float, mu_min: float | GibbsTable, eps: float) -> float:
    if isinstance(mu_min, GibbsTable):
        mu_min = mu_min.min_prob
    if not 0.0 < gap_abs <= 1.0:
        raise ValueError("absolute gap must lie in (0,1]")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0,1)")
    if not 0.0 < mu_min <= 1.0:
        raise ValueError("mu_min must lie in (0,1]")
    return max(0.0, math.log(1.0 / (eps * mu_min)) / gap_abs)


def analytic_inverse_marginal_bound(beta: float, gamma: float, lam: float, Delta: int) -> float:
    """Closed-form upper bound on ``1/b`` for uniform activity ``lam``."""
    if beta == 0:
        return (lam + 1 / lam) * (1 / gamma + gamma + 2) ** Delta
    return (lam + 1 / lam) * (1 / beta + 2) ** Delta


def exact_marginal_bound(table: GibbsTable) -> float:
    """Smallest positive single-site conditional marginal over all pinnings."""
    n = table.n
    M = partial_masses(table).reshape((3,) * n)
    best = 1.0
    for v in range(n):
        lo = np.take(M, 0, axis=v)
        hi = np.take(M, 1, axis=v)
        tot = np.take(M, 2, axis=v)
        ok = tot > 0
        for part in (lo, hi):
            r = part[ok] / tot[ok]
            r = r[r > 0]
            if r.size:
                best = min(best, float(r.min()))
    return best


def worst_start_tv(P: TransitionMatrix, t: int) -> float:
    Pt = np.linalg.matrix_power(P.P, t)
    return float(0.5 * np.abs(Pt - P.table.probs[None, :]).sum(axis=1).max())


def first_time_below(P: TransitionMatrix, eps: float, t_max: int) -> int | None:
    mu = P.table.probs
    cur = np.eye(P.size)
    for t in range(0, t_max + 1):
        if 0.5 * np.abs(cur - mu[None, :]).sum(axis=1).max() < eps:
            return t
        cur = cur @ P.P
    return None


def field_dirichlet_identity_check(table: GibbsTable, theta: float, f: Sequence[float]) -> float:
    """``|E_P(f,f) - RHS|`` for the subset-average form of the field-dynamics Dirichlet form."""
    f = np.asarray(f, dtype=float)
    P = transition_matrix(DynamicsSpec.field(theta), table)
    lhs = chain_functionals(P, f).dirichlet_pairs
    n = table.n
    free = table.free_vertices
    m = len(free)
    pi = magnetize_table(table, theta)
    z_ratio = float(table.probs @ theta ** (table.states[:, list(free)] > 0).sum(axis=1))
    rhs = 0.0
    for r in range(m + 1):
        for R in combinations(free, r):
            rmask = sum(bit(v, n) for v in R)
            keep = (pi.codes & rmask) == rmask
            mass = float(pi.probs[keep].sum())
            if mass <= 0:
                continue
            q = pi.probs[keep] / mass
            fr = f[keep]
            var = float(q @ (fr - q @ fr) ** 2)
            rhs += (1 - theta) ** r * theta ** (m - r) * mass * var
    rhs *= z_ratio / theta**m
    return abs(lhs - rhs)


def report(P: TransitionMatrix, checks: Sequence[Check] = (), spectrum_len: int = 16) -> dict:
    """JSON-ready summary of one chain."""
    rep = spectral_report(P)
    table = P.table
    graph = table.system.graph if table.system is not None else None
    return {
        "graph": {"n": table.n, "edges": [list(e) for e in graph.edges]} if graph else {"n": table.n, "edges": []},
        "params": table.system.params() if table.system is not None else {},
        "dynamics": P.spec.to_dict(),
        "support": table.size,
        "gap": rep.gap,
        "abs_gap": rep.abs_gap,
        "db_residual": rep.db_residual,
        "spectrum": [float(x) for x in rep.eigenvalues[:spectrum_len]],
        "checks": [c.to_dict() for c in checks],
    }
