"""Pairwise influence matrices and spectral-independence estimates."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    GibbsTable,
    InfeasiblePinning,
    Pinning,
    TwoSpinSystem,
    all_pinnings,
    enumerate_distribution,
    magnetize_table,
    partial_masses,
)

FLAVORS = ("absolute", "signed")


@dataclass(frozen=True, eq=False)
class InfluenceMatrix:
    """Influence among the unpinned vertices ``index``."""

    index: tuple[int, ...]
    matrix: np.ndarray
    flavor: str


def _pin_from_index(idx: int, n: int) -> Pinning:
    digits = []
    for _ in range(n):
        digits.append(idx % 3)
        idx //= 3
    digits.reverse()
    dom = [v for v, d in enumerate(digits) if d != 2]
    return Pinning(tuple(dom), tuple(1 if digits[v] == 1 else -1 for v in dom))


def all_influence_matrices(table: GibbsTable, flavor: str = "absolute") -> tuple[np.ndarray, np.ndarray]:
    """Influence matrices for every feasible pinning at once.

    Returns ``(pin_ids, stack)`` where ``pin_ids`` are ternary pinning indices
    (see ``Pinning.ternary``) and ``stack[i]`` is the ``n x n`` matrix for
    that pinning, with zero rows and columns at pinned vertices.
    """
    if flavor not in FLAVORS:
        raise ValueError(f"flavor must be one of {FLAVORS}")
    n = table.n
    flat = partial_masses(table)
    out = np.zeros((3,) * n + (n, n))
    M = flat.reshape((3,) * n)
    for u in range(n):
        Mu = [np.take(M, c, axis=u) for c in (0, 1)]
        for v in range(n):
            if v == u:
                continue
            vv = v - 1 if v > u else v
            tot = [np.take(m, 2, axis=vv) for m in Mu]
            ok = (tot[0] > 0) & (tot[1] > 0)
            q = []
            for c in (0, 1):
                num = np.take(Mu[c], 1, axis=vv)
                q.append(np.divide(num, tot[c], out=np.zeros_like(num), where=tot[c] > 0))
            vals = np.where(ok, q[1] - q[0], 0.0)
            if flavor == "absolute":
                vals = np.abs(vals)
            sl: list = [slice(None)] * n
            sl[u] = 2
            sl[v] = 2
            out[tuple(sl) + (u, v)] = vals
    stack = out.reshape(3**n, n, n)
    ids = np.flatnonzero(flat > 0)
    return ids, stack[ids]


def influence_matrix(table: GibbsTable, pin: Pinning | None = None, flavor: str = "absolute") -> InfluenceMatrix:
    pin = pin or Pinning()
    n = table.n
    merged = table.pinning.merge(pin)
    idx = merged.ternary(n)
    flat = partial_masses(table)
    if flat[idx] <= 0:
        raise InfeasiblePinning(f"pinning {pin.as_dict()} has zero mass")
    ids, stack = all_influence_matrices(table, flavor)
    mat = stack[int(np.searchsorted(ids, idx))]
    free = tuple(v for v in range(n) if v not in set(merged.domain))
    return InfluenceMatrix(free, mat[np.ix_(free, free)], flavor)


def spectral_radius(M: InfluenceMatrix | np.ndarray) -> float:
    A = M.matrix if isinstance(M, InfluenceMatrix) else np.asarray(M)
    if A.size == 0:
        return 0.0
    return float(np.abs(np.linalg.eigvals(A)).max())


def spectral_radii(stack: np.ndarray) -> np.ndarray:
    if stack.shape[-1] == 0:
        return np.zeros(stack.shape[0])
    return np.abs(np.linalg.eigvals(stack)).max(axis=-1)


def max_spectral_radius(table: GibbsTable, flavor: str = "absolute") -> tuple[float, Pinning]:
    """Largest influence spectral radius over all feasible pinnings."""
    ids, stack = all_influence_matrices(table, flavor)
    rho = spectral_radii(stack)
    i = int(np.argmax(rho))
    return float(rho[i]), _pin_from_index(int(ids[i]), table.n)


def flavor_comparison(table: GibbsTable, tol: float = 1e-9) -> dict:
    """Worst-case radii under both influence flavors, flagging pinnings where they differ."""
    ids, a = all_influence_matrices(table, "absolute")
    _, s = all_influence_matrices(table, "signed")
    ra, rs = spectral_radii(a), spectral_radii(s)
    diff = np.abs(ra - rs)
    flagged = [
        {"pinning": {str(k): v for k, v in _pin_from_index(int(i), table.n).as_dict().items()}, "absolute": float(x), "signed": float(y)}
        for i, x, y, dd in zip(ids, ra, rs, diff)
        if dd > tol
    ]
    return {
        "absolute_max": float(ra.max()),
        "signed_max": float(rs.max()),
        "max_difference": float(diff.max()),
        "tolerance": tol,
        "flagged": flagged,
    }


def good_direction(system: TwoSpinSystem) -> np.ndarray:
    """``+1`` where the activity sits at or below ``(gamma/beta)**(deg/2)``."""
    out = np.ones(system.n, dtype=np.int8)
    if system.beta == 0:
        return out
    log_ratio = math.log(system.gamma) - math.log(system.beta)
    for v, (lam, deg) in enumerate(zip(system.fields, system.graph.degrees)):
        if math.log(lam) > 0.5 * deg * log_ratio:
            out[v] = -1
    return out


@dataclass
class SIEstimate:
    """Grid lower bound on the complete spectral-independence constant."""

    eta_hat: float
    argmax_field: np.ndarray
    argmax_pinning: Pinning
    fields: list[np.ndarray]
    per_field: list[float]
    records: list[tuple[int, int, float]] = field(default_factory=list, repr=False)
    label: str = "grid lower bound"

    def to_dict(self) -> dict:
        return {
            "eta_hat": self.eta_hat,
            "label": self.label,
            "grid_points": len(self.fields),
            "argmax_field": [float(x) for x in self.argmax_field],
            "argmax_pinning": {str(k): v for k, v in self.argmax_pinning.as_dict().items()},
            "per_field_max": [float(x) for x in self.per_field],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["field_id", "pinning_id", "rho"])
        for row in self.records:
            w.writerow([row[0], row[1], repr(float(row[2]))])
        return buf.getvalue()


DEFAULT_THETAS = tuple(round(0.05 * i, 2) for i in range(1, 21))


def default_field_grid(n: int, n_random: int = 50, seed: int = 0, thetas=DEFAULT_THETAS) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    grid = [np.full(n, t) for t in thetas]
    grid += [1.0 - rng.random(n) for _ in range(n_random)]  # values in (0, 1]
    return grid


def _as_table(target: TwoSpinSystem | GibbsTable) -> GibbsTable:
    return enumerate_distribution(target) if isinstance(target, TwoSpinSystem) else target


def complete_si_estimate(
    target: TwoSpinSystem | GibbsTable,
    fields: list[np.ndarray] | None = None,
    n_random: int = 50,
    seed: int = 0,
    refine_rounds: int = 0,
    flavor: str = "absolute",
    keep_records: bool = False,
    cap: int = 9,
) -> SIEstimate:
    """Max of the influence spectral radius over pinnings and a field grid.

    ``refine_rounds`` adds local perturbations of the current best field and
    fresh random points until the maximum stops moving.
    """
    table = _as_table(target)
    n = table.n
    if n > cap:
        raise ValueError(f"pinning sweep capped at n <= {cap}")
    grid = list(fields) if fields is not None else default_field_grid(n, n_random, seed)
    rng = np.random.default_rng(seed + 1)
    best = -1.0
    best_field = grid[0]
    best_pin = Pinning()
    per_field: list[float] = []
    records: list[tuple[int, int, float]] = []
    evaluated: list[np.ndarray] = []

    def run(points: list[np.ndarray]) -> None:
        nonlocal best, best_field, best_pin
        for phi in points:
            fid = len(evaluated)
            evaluated.append(np.asarray(phi, dtype=float))
            t = magnetize_table(table, phi)
            ids, stack = all_influence_matrices(t, flavor)
            rho = spectral_radii(stack)
            i = int(np.argmax(rho))
            per_field.append(float(rho[i]))
            if keep_records:
                records.extend((fid, int(pid), float(r)) for pid, r in zip(ids, rho))
            if rho[i] > best:
                best, best_field, best_pin = float(rho[i]), evaluated[-1], _pin_from_index(int(ids[i]), n)

    run(grid)
    for _ in range(refine_rounds):
        before = best
        local = []
        for v in range(n):
            for scale in (0.5, 0.9, 1.1, 2.0):
                phi = best_field.copy()
                phi[v] = min(1.0, max(1e-3, phi[v] * scale))
                local.append(phi)
        local += [1.0 - rng.random(n) for _ in range(n_random)]
        run(local)
        if best - before < 1e-6:
            break
    return SIEstimate(best, best_field, best_pin, evaluated, per_field, records)
