"""Path-coupling certificates for single-site Glauber dynamics.

The coupling picks the same vertex in both copies and resamples it with the
optimal coupling of the two single-site conditionals.  Conditionals are
taken from the local formula, which also makes sense on infeasible
configurations, so adjacent pairs range over the whole cube.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import TransitionMatrix, detailed_balance_residual, spectrum
from .core import Graph, Pinning, TwoSpinSystem, enumerate_distribution, magnetize
from .influence import good_direction
from .uniqueness import decay

REVERSIBILITY_TOL = 1e-8


@dataclass(frozen=True)
class WeightedHamming:
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if any(not w > 0 for w in self.weights):
            raise ValueError("weights must be positive")

    @classmethod
    def unit(cls, n: int) -> "WeightedHamming":
        return cls((1.0,) * n)

    @classmethod
    def degree_weights(cls, graph: Graph, delta: float) -> "WeightedHamming":
        """Degree weights with leaves discounted to ``1 - delta/8``; isolated vertices get 1."""
        out = []
        for d in graph.degrees:
            out.append(1.0 - delta / 8 if d == 1 else float(d) if d > 1 else 1.0)
        return cls(tuple(out))

    def __call__(self, x, y) -> float:
        x, y = np.asarray(x), np.asarray(y)
        return float(np.asarray(self.weights)[x != y].sum())


def plus_probability(system: TwoSpinSystem, u: int, s: int) -> float:
    """Chance that ``u`` resamples to ``+1`` when ``s`` of its neighbours are ``-1``."""
    deg = system.graph.degrees[u]
    lam = system.fields[u]
    top = lam * system.beta ** (deg - s)  # 0.0 ** 0 == 1
    return top / (system.gamma**s + top)


def dobrushin_entry(system: TwoSpinSystem, u: int) -> float:
    """Largest change in ``u``'s conditional when one neighbour flips."""
    deg = system.graph.degrees[u]
    if deg == 0:
        return 0.0
    p = [plus_probability(system, u, s) for s in range(deg + 1)]
    return max(abs(p[s + 1] - p[s]) for s in range(deg))


def dobrushin_row(system: TwoSpinSystem, v: int) -> dict[int, float]:
    """``R(v, u)`` for every neighbour ``u`` of ``v``."""
    if not 0 <= v < system.n:
        raise ValueError("vertex out of range")
    return {u: dobrushin_entry(system, u) for u in system.graph.adjacency[v]}


def claim_isfd_factor(system: TwoSpinSystem, u: int, s: int) -> float:
    """``f_{deg u}`` at ``lam_u (beta gamma)^s / gamma^(deg u - 1)``."""
    deg = system.graph.degrees[u]
    if deg < 2:
        raise ValueError("needs a vertex of degree at least 2")
    if not 0 <= s <= deg - 1:
        raise ValueError("s must lie in [0, deg-1]")
    b, g = system.beta, system.gamma
    x = system.fields[u] * (b * g) ** s / g ** (deg - 1)
    return decay(b, g, deg, x)


def magnetize_good(system: TwoSpinSystem, theta: float) -> TwoSpinSystem:
    """Scale every activity by ``theta`` raised to the good direction."""
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0,1)")
    chi = good_direction(system)
    return magnetize(system, theta ** chi.astype(float))


@dataclass
class CouplingCertificate:
    r: float
    worst_vertex: int
    table: list[dict]
    r_feasible: float | None
    weights: tuple[float, ...]
    passed: bool
    n: int
    pinning: Pinning = field(default_factory=Pinning)

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "worst_vertex": self.worst_vertex,
            "r_feasible": self.r_feasible,
            "pass": self.passed,
            "weights": list(self.weights),
            "table": self.table,
        }


def _feasible_rate(system: TwoSpinSystem, weights: np.ndarray, pin: Pinning) -> float | None:
    """Same rate restricted to adjacent pairs of feasible configurations."""
    if system.n > 16:
        return None
    table = enumerate_distribution(system)
    n = system.n
    spins = table.states
    pinned = set(pin.domain)
    ok = np.ones(len(spins), dtype=bool)
    for v, s in pin.as_dict().items():
        ok &= spins[:, v] == s
    states = spins[ok]
    if len(states) < 2:
        return 1.0
    adj = system.graph.adjacency
    lam = system.fields_array
    b, g = system.beta, system.gamma
    deg = np.asarray(system.graph.degrees)
    minus = np.zeros((len(states), n), dtype=int)
    for u in range(n):
        for w in adj[u]:
            minus[:, u] += states[:, w] < 0
    with np.errstate(divide="ignore", invalid="ignore"):
        top = lam * np.power(b, deg - minus)
    p_plus = top / (np.power(g, minus) + top)
    index = {tuple(s): i for i, s in enumerate(states)}
    worst = 0.0
    for i, x in enumerate(states):
        for v in range(n):
            if v in pinned or x[v] > 0:
                continue
            y = x.copy()
            y[v] = 1
            j = index.get(tuple(y))
            if j is None:
                continue
            dist = weights[v] * (1 - 1 / n)
            for u in adj[v]:
                if u not in pinned:
                    dist += weights[u] * abs(p_plus[i, u] - p_plus[j, u]) / n
            worst = max(worst, dist / weights[v])
    return 1.0 - worst


def path_coupling_certificate(
    system: TwoSpinSystem,
    metric: WeightedHamming | None = None,
    pin: Pinning | None = None,
    feasible: bool = True,
) -> CouplingCertificate:
    """One-step contraction rate of the weighted distance over adjacent pairs.

    For a disagreement at ``v`` the expected new distance is
    ``w_v (1 - 1/n) + (1/n) sum_u w_u R(v,u)`` over unpinned neighbours ``u``.
    """
    n = system.n
    metric = metric or WeightedHamming.unit(n)
    if len(metric.weights) != n:
        raise ValueError("metric size does not match the graph")
    pin = pin or Pinning()
    pinned = set(pin.domain)
    w = np.asarray(metric.weights)
    rows = []
    worst, worst_v = -math.inf, -1
    for v in range(n):
        if v in pinned:
            continue
        row = {u: r for u, r in dobrushin_row(system, v).items() if u not in pinned}
        expected = w[v] * (1 - 1 / n) + sum(w[u] * r for u, r in row.items()) / n
        ratio = expected / w[v]
        rows.append(
            {
                "vertex": v,
                "weight": float(w[v]),
                "expected": float(expected),
                "ratio": float(ratio),
                "dobrushin": {str(u): float(r) for u, r in sorted(row.items())},
            }
        )
        if ratio > worst:
            worst, worst_v = ratio, v
    r = 1.0 - worst if rows else 1.0
    r_feas = _feasible_rate(system, w, pin) if feasible else None
    return CouplingCertificate(float(r), worst_v, rows, r_feas, metric.weights, bool(r > 0), n, pin)


def coupling_gap_bridge(cert: CouplingCertificate, P: TransitionMatrix) -> tuple[bool, float]:
    """Check ``1 - lambda_2(P) >= r``; returns the verdict and the computed ``1 - lambda_2``."""
    if not cert.passed:
        raise ValueError("certificate failed (r <= 0); no gap claim can be drawn")
    if detailed_balance_residual(P) > REVERSIBILITY_TOL:
        raise ValueError("transition matrix is not reversible")
    ev = spectrum(P)
    one_minus = 1.0 if ev.size < 2 else float(1.0 - ev[1])
    return bool(one_minus >= cert.r - 1e-9), one_minus
