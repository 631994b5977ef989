"""Tree-recursion fixed points and uniqueness with a gap."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from scipy.optimize import brentq

FP_TOL = 1e-12
ID_TOL = 1e-8


@dataclass(frozen=True)
class UniquenessQuery:
    beta: float
    gamma: float
    lam: float
    delta: float | None = None

    def __post_init__(self) -> None:
        if self.beta < 0 or self.gamma <= 0 or self.beta > self.gamma:
            raise ValueError("need 0 <= beta <= gamma and gamma > 0")
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if self.beta * self.gamma >= 1:
            raise ValueError("uniqueness analysis needs beta*gamma < 1")
        if self.delta is not None and not 0.0 <= self.delta < 1.0:
            raise ValueError("delta must lie in [0,1)")


def recursion(beta: float, gamma: float, lam: float, d: int, x: float) -> float:
    """``lam * ((beta x + 1)/(x + gamma))**d`` with ``x`` allowed to be ``inf``."""
    if math.isinf(x):
        return lam * beta**d
    return lam * ((beta * x + 1.0) / (x + gamma)) ** d


def decay(beta: float, gamma: float, d: int, x: float) -> float:
    """``|F_d'(x)|`` evaluated through ``x``: ``d(1-beta gamma)x/((beta x+1)(x+gamma))``."""
    if x == 0:
        return 0.0
    if math.isinf(x):
        return 0.0 if beta > 0 else float(d) * (1 - beta * gamma)
    return d * (1.0 - beta * gamma) * x / ((beta * x + 1.0) * (x + gamma))


def fixed_point(q: UniquenessQuery, d: int) -> float:
    if d < 1:
        raise ValueError("d must be at least 1")
    log_hi = math.log(q.lam) - d * math.log(q.gamma)
    a, b = q.lam * q.beta**d, math.exp(min(log_hi, 700.0))
    lo, hi = min(a, b) * (1 - 1e-9), max(a, b) * (1 + 1e-9)

    def g(x: float) -> float:
        return x - recursion(q.beta, q.gamma, q.lam, d, x)

    if g(lo) >= 0:
        return lo
    x = brentq(g, lo, hi, xtol=1e-300, rtol=8.9e-16, maxiter=500)
    return float(x)


def decay_at_fixed_point(q: UniquenessQuery, d: int) -> float:
    return decay(q.beta, q.gamma, d, fixed_point(q, d))


def decay_finite_difference(q: UniquenessQuery, d: int, rel: float = 1e-6) -> float:
    x = fixed_point(q, d)
    h = rel * max(x, 1e-12)
    up = recursion(q.beta, q.gamma, q.lam, d, x + h)
    dn = recursion(q.beta, q.gamma, q.lam, d, max(x - h, 0.0))
    return abs(up - dn) / (x + h - max(x - h, 0.0))


def lambda_c(Delta: int) -> float:
    if int(Delta) != Delta or Delta < 3:
        raise ValueError("Delta must be an integer >= 3")
    D = int(Delta)
    return float(Fraction((D - 1) ** (D - 1), (D - 2) ** D))


def lambda_c_delta(d: int, gamma: float, delta: float) -> float:
    """Largest hardcore-type activity (``beta = 0``) that is ``d``-unique with gap ``delta``."""
    return (1 - delta) * d**d * gamma ** (d + 1) / (d - 1 + delta) ** (d + 1)


def delta_bar(beta: float, gamma: float) -> float:
    s = math.sqrt(beta * gamma)
    return (1 + s) / (1 - s)


def ising_interval(Delta: int, delta: float) -> tuple[float, float]:
    return ((Delta - 2 + delta) / (Delta - delta), (Delta - delta) / (Delta - 2 + delta))


@dataclass(frozen=True)
class CriticalRoots:
    x1: float
    x2: float
    lam1: float
    lam2: float
    zeta: float


def critical_roots(q: UniquenessQuery, d: int) -> CriticalRoots | None:
    """Roots of ``f_d(x) = 1 - delta`` and the matching activities, if that branch applies."""
    if q.delta is None:
        raise ValueError("critical roots need a gap delta")
    b, g, dl = q.beta, q.gamma, q.delta
    if b == 0:
        raise ValueError("critical roots need beta > 0")
    if d < (1 - dl) * delta_bar(b, g):
        return None
    zeta = d * (1 - b * g) - (1 - dl) * (1 + b * g)
    disc = max(zeta**2 - 4 * (1 - dl) ** 2 * b * g, 0.0)
    root = math.sqrt(disc)
    x1 = (zeta - root) / (2 * (1 - dl) * b)
    x2 = (zeta + root) / (2 * (1 - dl) * b)

    def lam_of(x: float) -> float:
        # log space: the power overflows for large d
        if x <= 0:
            return 0.0
        log_lam = math.log(x) + d * (math.log(x + g) - math.log(b * x + 1))
        return math.exp(log_lam) if log_lam < 700 else math.inf

    return CriticalRoots(x1, x2, lam_of(x1), lam_of(x2), zeta)


@dataclass
class DegreeResult:
    d: int
    x_hat: float
    decay: float
    passed: bool
    cross_check: bool | None = None
    roots: CriticalRoots | None = None

    def to_dict(self) -> dict:
        out = {
            "d": self.d,
            "x_hat": self.x_hat,
            "decay": self.decay,
            "pass": self.passed,
            "cross_check": self.cross_check,
        }
        if self.roots is not None:
            r = self.roots
            out["roots"] = {"x1": r.x1, "x2": r.x2, "lambda1": r.lam1, "lambda2": r.lam2, "zeta": r.zeta}
        return out


@dataclass
class UniquenessReport:
    beta: float
    gamma: float
    lam: float
    delta: float
    mode: str
    degrees: list[DegreeResult]
    passed: bool
    solved_gap: float
    delta_bar: float | None
    heuristic: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return all(r.cross_check is not False for r in self.degrees)

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "gamma": self.gamma,
            "lambda": self.lam,
            "delta": self.delta,
            "mode": self.mode,
            "pass": self.passed,
            "solved_gap": self.solved_gap,
            "delta_bar": self.delta_bar,
            "heuristic": self.heuristic,
            "consistent": self.consistent,
            "degrees": [r.to_dict() for r in self.degrees],
            "notes": list(self.notes),
        }


def _degree(q: UniquenessQuery, d: int, delta: float) -> DegreeResult:
    x = fixed_point(q, d)
    f = decay(q.beta, q.gamma, d, x)
    ok = f <= 1 - delta
    near = abs(f - (1 - delta)) < 1e-9
    cross: bool | None = None
    roots = None
    if q.beta == 0:
        alt = q.lam <= lambda_c_delta(d, q.gamma, delta) if delta > 0 or d > 1 else True
        cross = None if near else alt == ok
    elif delta < 1:
        qq = UniquenessQuery(q.beta, q.gamma, q.lam, delta)
        roots = critical_roots(qq, d)
        alt = True if roots is None else (q.lam <= roots.lam1 or q.lam >= roots.lam2)
        cross = None if near else alt == ok
    return DegreeResult(d, x, f, ok, cross, roots)


def _tail_certified(q: UniquenessQuery, k: int, level: float) -> bool:
    """For ``gamma > 1``: ``f_d <= d (1 - beta gamma) lam / gamma**(d+1)``, nonincreasing once ``d >= 1/(gamma-1)``."""
    if q.gamma <= 1 or k + 1 < 1 / (q.gamma - 1):
        return False
    log_bound = math.log(k + 1) + math.log1p(-q.beta * q.gamma) + math.log(q.lam) - (k + 2) * math.log(q.gamma)
    return log_bound <= math.log(level) if level > 0 else False


def degrees_for(Delta: int) -> range:
    return range(1, max(Delta - 1, 1) + 1)


def solved_gap(beta: float, gamma: float, lam: float, Delta: int) -> float:
    """Largest gap for which the parameters are up-to-``Delta`` unique (may be <= 0)."""
    q = UniquenessQuery(beta, gamma, lam)
    return 1.0 - max(decay_at_fixed_point(q, d) for d in degrees_for(Delta))


def uniqueness_check(
    q: UniquenessQuery,
    d: int | None = None,
    Delta: int | float | None = None,
    d_max: int = 100_000,
) -> UniquenessReport:
    """Single-degree check (``d``) or up-to-``Delta`` check (``Delta``; ``inf`` allowed).

    Without an explicit gap the solved gap is used, so the verdict is
    "unique with some positive gap".
    """
    if (d is None) == (Delta is None):
        raise ValueError("give exactly one of d or Delta")
    notes: list[str] = []
    heuristic = False
    if d is not None:
        mode = "single-d"
        todo: Sequence[int] = [d]
    elif math.isinf(Delta):
        mode = "up-to-infinity"
        todo = []
    else:
        if Delta < 3:
            notes.append("maximum degree below 3; checking d = 1 only")
        mode = "up-to-Delta"
        todo = list(degrees_for(int(Delta)))
    if todo:
        fs = [decay_at_fixed_point(q, k) for k in todo]
        gap = 1.0 - max(fs)
        delta = q.delta if q.delta is not None else max(gap, 0.0)
        results = [_degree(q, k, delta) for k in todo]
    else:
        delta = q.delta if q.delta is not None else 0.0
        results = []
        history: list[float] = []
        k = 1
        while k <= d_max:
            r = _degree(q, k, delta)
            results.append(r)
            history.append(r.decay)
            if not r.passed:
                break
            if _tail_certified(q, k, 1 - delta if q.delta is not None else max(history)):
                notes.append(f"tail bound certifies every d > {k}")
                break
            if len(history) >= 4 and all(
                0 <= history[-i] - history[-i - 1] < 1e-12 for i in range(1, 4)
            ):
                heuristic = True
                notes.append(f"decay settled by d={k}; pass for all d is a heuristic call")
                break
            k += 1
        else:
            heuristic = True
            notes.append(f"no failure up to d={d_max}; pass for all d is a heuristic call")
        gap = 1.0 - max(r.decay for r in results)
    passed = all(r.passed for r in results) and (q.delta is not None or gap > 1e-12)
    if q.beta == 0 and q.gamma == 1 and Delta is not None and not math.isinf(Delta) and Delta >= 3:
        lc = lambda_c(int(Delta))
        if abs(q.lam - lc) <= 1e-9 * lc:
            notes.append(f"lambda equals the critical activity {lc:g} for maximum degree {int(Delta)}")
    db = delta_bar(q.beta, q.gamma) if q.beta > 0 else None
    return UniquenessReport(q.beta, q.gamma, q.lam, delta, mode, results, passed, gap, db, heuristic, notes)


def flip_invariance_check(q: UniquenessQuery, d: int, thetas: Sequence[float] | None = None) -> bool:
    """Does moving the activity along the good direction keep ``d``-uniqueness with gap ``delta``?

    The vertex is taken to have degree ``d + 1``.
    """
    if q.delta is None:
        raise ValueError("need a gap delta")
    if decay_at_fixed_point(q, d) > 1 - q.delta:
        raise ValueError("precondition: parameters must be d-unique with gap delta")
    thetas = thetas if thetas is not None else [i / 20 for i in range(1, 21)]
    if q.beta == 0:
        chi = 1
    else:
        chi = 1 if math.log(q.lam) <= 0.5 * (d + 1) * (math.log(q.gamma) - math.log(q.beta)) else -1
    for t in thetas:
        lam_v = q.lam * t**chi
        qq = UniquenessQuery(q.beta, q.gamma, lam_v, q.delta)
        if decay_at_fixed_point(qq, d) > 1 - q.delta + 1e-12:
            return False
    return True
