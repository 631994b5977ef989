"""Runnable samplers: Glauber, uniform block, field and projected block dynamics.

Every step consumes a fixed number of uniforms from ``Generator.random`` in a
documented order:

* Glauber: vertex pick, then the heat-bath draw (2 uniforms).
* Block(l): ``l`` uniforms for a partial Fisher-Yates pick of the block, then
  the resampling draw.
* Field(theta): one coin per vertex in vertex order, then the resampling draw
  (or ``2 * inner_steps`` uniforms when the inner-Glauber mode is on).
* ProjectedBlock(k, l): ``l`` uniforms for the hypergeometric urn, one coin
  per vertex, then the resampling draw.

Resampling draws use the inverse CDF over candidate states in canonical order.
Because the count is fixed, ``run_chain`` can pull uniforms in bulk and still
reproduce the single-step functions exactly.
"""

from __future__ import annotations

import bisect
import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from .core import (
    GibbsTable,
    bit,
    codes_from_spins,
    format_spins,
    magnetize_table,
    spins_from_codes,
)

KINDS = ("glauber", "block", "field", "projected")


@dataclass(frozen=True)
class DynamicsSpec:
    """Which chain to run; ``pick`` selects the vertex pool for Glauber/block."""

    kind: str
    ell: int | None = None
    theta: float | None = None
    k: int | None = None
    pick: str = "free"
    inner_steps: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown dynamics {self.kind!r}")
        if self.pick not in ("free", "all"):
            raise ValueError("pick must be 'free' or 'all'")
        if self.kind == "block" and (self.ell is None or self.ell < 1):
            raise ValueError("block dynamics needs ell >= 1")
        if self.kind == "field":
            if self.theta is None or not 0.0 < self.theta < 1.0:
                raise ValueError("theta must lie in (0,1)")
            if self.inner_steps is not None and self.inner_steps < 1:
                raise ValueError("inner_steps must be positive")
        if self.kind == "projected":
            if self.k is None or self.k < 1:
                raise ValueError("projected block dynamics needs k >= 1")
            if self.ell is None or self.ell < 1:
                raise ValueError("projected block dynamics needs ell >= 1")

    @classmethod
    def glauber(cls, pick: str = "free") -> "DynamicsSpec":
        return cls("glauber", pick=pick)

    @classmethod
    def block(cls, ell: int, pick: str = "free") -> "DynamicsSpec":
        return cls("block", ell=ell, pick=pick)

    @classmethod
    def field(cls, theta: float, inner_steps: int | None = None) -> "DynamicsSpec":
        return cls("field", theta=theta, inner_steps=inner_steps)

    @classmethod
    def projected(cls, k: int, ell: int) -> "DynamicsSpec":
        return cls("projected", k=k, ell=ell)

    def check_against(self, table: GibbsTable) -> None:
        pool = len(table.free_vertices) if self.pick == "free" else table.n
        if self.kind == "block" and self.ell > pool:
            raise ValueError(f"ell={self.ell} exceeds the {pool} available vertices")
        if self.kind == "projected" and self.ell > self.k * table.n:
            raise ValueError(f"ell={self.ell} exceeds k*n={self.k * table.n}")

    def label(self) -> str:
        if self.kind == "glauber":
            return "Glauber"
        if self.kind == "block":
            return f"Block(ell={self.ell})"
        if self.kind == "field":
            extra = f", inner={self.inner_steps}" if self.inner_steps else ""
            return f"Field(theta={self.theta:g}{extra})"
        return f"ProjectedBlock(k={self.k}, ell={self.ell})"

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "label": self.label()}
        for key in ("ell", "theta", "k", "inner_steps"):
            val = getattr(self, key)
            if val is not None:
                d[key] = val
        if self.kind in ("glauber", "block"):
            d["pick"] = self.pick
        return d


@dataclass(frozen=True)
class HyperGeoParams:
    n: int
    k: int
    ell: int

    def __post_init__(self) -> None:
        if self.n < 1 or self.k < 1:
            raise ValueError("need n >= 1 and k >= 1")
        if not 0 <= self.ell <= self.n * self.k:
            raise ValueError("ell must lie in [0, k*n]")


def hypergeo_pmf(params: HyperGeoParams, a: Sequence[int]) -> float:
    a = list(a)
    if len(a) != params.n or sum(a) != params.ell or any(x < 0 or x > params.k for x in a):
        return 0.0
    num = 1
    for x in a:
        num *= math.comb(params.k, x)
    return num / math.comb(params.k * params.n, params.ell)


def hypergeo_support(params: HyperGeoParams) -> list[tuple[int, ...]]:
    """All count vectors with positive mass, in lexicographic order."""
    out: list[tuple[int, ...]] = []

    def rec(prefix: list[int], left: int, slots: int) -> None:
        if slots == 1:
            if left <= params.k:
                out.append(tuple(prefix + [left]))
            return
        for x in range(0, min(params.k, left) + 1):
            if left - x <= params.k * (slots - 1):
                rec(prefix + [x], left - x, slots - 1)

    rec([], params.ell, params.n)
    return out


def _urn(u: Sequence[float], n: int, k: int) -> list[int]:
    """Draw ``len(u)`` balls without replacement from ``n`` buckets of ``k``."""
    left = [k] * n
    total = n * k
    a = [0] * n
    for x in u:
        j = int(x * total)
        b = 0
        while j >= left[b]:
            j -= left[b]
            b += 1
        left[b] -= 1
        a[b] += 1
        total -= 1
    return a


def hypergeo_sample(params: HyperGeoParams, rng: np.random.Generator) -> np.ndarray:
    """Standalone draw; the projected-block kernel uses ``_urn`` to keep its fixed uniform count."""
    return rng.multivariate_hypergeometric([params.k] * params.n, params.ell).astype(int)


# ---------------------------------------------------------------------------
# kernels


def _submasks(mask: int) -> list[int]:
    """All submasks of ``mask`` in increasing order."""
    subs = []
    s = 0
    while True:
        subs.append(s)
        if s == mask:
            break
        s = (s - mask) & mask
    return subs


class Kernel:
    """One-step sampler for a fixed table and dynamics."""

    def __init__(self, table: GibbsTable, spec: DynamicsSpec):
        spec.check_against(table)
        self.table = table
        self.spec = spec
        self.n = n = table.n
        self.bits = [bit(v, n) for v in range(n)]
        self.full = (1 << n) - 1
        self.free = list(table.free_vertices)
        self._free_set = set(self.free)
        self.pool = self.free if spec.pick == "free" else list(range(n))
        self.free_mask = sum(self.bits[v] for v in self.free)
        target = table
        if spec.kind == "field":
            target = magnetize_table(table, spec.theta)
        self.target = target
        self.p = target.full_probs.tolist()
        self._cache: dict = {}
        if spec.kind == "glauber":
            self.draws = 2
            self._pminus = self._glauber_table()
        elif spec.kind == "block":
            self.draws = spec.ell + 1
        elif spec.kind == "field":
            self.draws = n + (2 * spec.inner_steps if spec.inner_steps else 1)
            if spec.inner_steps:
                self._pminus = self._glauber_table()
        else:
            self.draws = spec.ell + n + 1

    def _glauber_table(self) -> list[float]:
        """Flat list: P(v = -1 | rest) indexed by ``base * n + v`` with bit v cleared."""
        p = np.asarray(self.p)
        n = self.n
        codes = np.arange(1 << n)
        out = np.zeros((1 << n, n))
        for v, b in enumerate(self.bits):
            lo = p[codes & ~b]
            hi = p[codes | b]
            tot = lo + hi
            with np.errstate(invalid="ignore", divide="ignore"):
                out[:, v] = np.where(tot > 0, lo / np.where(tot > 0, tot, 1), 1.0)
        return out.reshape(-1).tolist()

    def _conditional(self, S: int, base: int, key=None, weight=None):
        ck = (S, base, key)
        hit = self._cache.get(ck)
        if hit is not None:
            return hit
        subs = _submasks(S)
        cum = []
        acc = 0.0
        codes = []
        for s in subs:
            c = base | s
            w = self.p[c]
            if w > 0 and weight is not None:
                w *= weight(s)
            if w > 0:
                acc += w
                cum.append(acc)
                codes.append(c)
        if not codes:
            raise RuntimeError("conditional has no support; current state infeasible")
        hit = (cum, codes)
        if len(self._cache) < 200_000:
            self._cache[ck] = hit
        return hit

    def _draw(self, S: int, code: int, u: float, key=None, weight=None) -> int:
        cum, codes = self._conditional(S, code & ~S & self.full, key, weight)
        i = bisect.bisect_right(cum, u * cum[-1])
        return codes[min(i, len(codes) - 1)]

    def _glauber_update(self, code: int, u0: float, u1: float, pool: list[int]) -> int:
        v = pool[int(u0 * len(pool))]
        b = self.bits[v]
        base = code & ~b
        if v not in self._free_set:
            return code
        return base if u1 < self._pminus[base * self.n + v] else base | b

    def step(self, code: int, u: Sequence[float]) -> int:
        kind = self.spec.kind
        if kind == "glauber":
            if not self.pool:
                return code
            return self._glauber_update(code, u[0], u[1], self.pool)
        if kind == "block":
            ell = self.spec.ell
            pool = list(self.pool)
            S = 0
            m = len(pool)
            for j in range(ell):
                i = int(u[j] * (m - j))
                S |= self.bits[pool[i]]
                pool[i] = pool[m - j - 1]
            S &= self.free_mask
            return self._draw(S, code, u[ell]) if S else code
        if kind == "field":
            theta = self.spec.theta
            S = 0
            for v in self.free:
                b = self.bits[v]
                if not code & b or u[v] < theta:
                    S |= b
            if not S:
                return code
            if self.spec.inner_steps:
                sub = [v for v in self.free if S & self.bits[v]]
                off = self.n
                for _ in range(self.spec.inner_steps):
                    code = self._glauber_update(code, u[off], u[off + 1], sub)
                    off += 2
                return code
            return self._draw(S, code, u[self.n])
        # projected block
        k, ell, n = self.spec.k, self.spec.ell, self.n
        a = _urn(u[:ell], n, k)
        S = 0
        for v in self.free:
            b = self.bits[v]
            if not code & b or u[ell + v] < a[v] / k:
                S |= b
        if not S:
            return code
        bvec = [x / k for x in a]
        bits = self.bits

        def weight(s: int) -> float:
            w = 1.0
            for v in range(n):
                if s & bits[v]:
                    w *= bvec[v]
            return w

        return self._draw(S, code, u[ell + n], key=tuple(a), weight=weight)


@lru_cache(maxsize=64)
def kernel_for(table: GibbsTable, spec: DynamicsSpec) -> Kernel:
    return Kernel(table, spec)


# ---------------------------------------------------------------------------
# chain state and single steps


@dataclass
class ChainState:
    config: np.ndarray
    rng: np.random.Generator
    step: int = 0
    changed: bool = False

    @property
    def code(self) -> int:
        return int(codes_from_spins(self.config[None, :])[0])


def _check_feasible(table: GibbsTable, config: np.ndarray) -> int:
    config = np.asarray(config)
    if config.shape != (table.n,) or np.any(np.abs(config) != 1):
        raise ValueError("start must be a +-1 vector of length n")
    code = int(codes_from_spins(config[None, :])[0])
    if table.position[code] < 0:
        raise ValueError(f"configuration {format_spins(config)} is infeasible")
    return code


def advance(state: ChainState, table: GibbsTable, spec: DynamicsSpec) -> ChainState:
    code = _check_feasible(table, state.config)
    kern = kernel_for(table, spec)
    new = kern.step(code, state.rng.random(kern.draws))
    config = spins_from_codes(np.array([new]), table.n)[0]
    return ChainState(config, state.rng, state.step + 1, new != code)


def glauber_step(state: ChainState, table: GibbsTable, pick: str = "free") -> ChainState:
    return advance(state, table, DynamicsSpec.glauber(pick))


def block_step(state: ChainState, table: GibbsTable, ell: int) -> ChainState:
    return advance(state, table, DynamicsSpec.block(ell))


def field_step(
    state: ChainState, table: GibbsTable, theta: float, inner_steps: int | None = None
) -> ChainState:
    return advance(state, table, DynamicsSpec.field(theta, inner_steps))


def projected_block_step(state: ChainState, table: GibbsTable, k: int, ell: int) -> ChainState:
    return advance(state, table, DynamicsSpec.projected(k, ell))


# ---------------------------------------------------------------------------
# k-transformation


def k_transform_table(table: GibbsTable, k: int, cap: int = 16) -> GibbsTable:
    """Exact law of the lift; copy ``(v, i)`` is vertex ``v * k + i``."""
    if k < 1:
        raise ValueError("k must be positive")
    n = table.n
    if n * k > cap:
        raise ValueError(f"k-transform enumeration capped at k*n <= {cap}")
    N = n * k
    codes: list[int] = []
    probs: list[float] = []
    for sigma, p in zip(table.states, table.probs):
        plus = [v for v in range(n) if sigma[v] > 0]
        share = p / k ** len(plus)
        for choice in np.ndindex(*([k] * len(plus))):
            c = 0
            for v, i in zip(plus, choice):
                c |= bit(v * k + i, N)
            codes.append(c)
            probs.append(share)
    order = np.argsort(codes)
    return GibbsTable(N, np.asarray(codes)[order], np.asarray(probs)[order], 1.0)


def project_k(sigma: np.ndarray, n: int, k: int) -> np.ndarray:
    """``+1`` at ``v`` iff some copy of ``v`` is ``+1``."""
    sigma = np.asarray(sigma).reshape(n, k)
    return np.where((sigma > 0).any(axis=1), 1, -1).astype(np.int8)


def k_transform_sample(table: GibbsTable, k: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``X`` from ``table`` and place each ``+1`` at a uniform copy."""
    if k < 1:
        raise ValueError("k must be positive")
    cum = np.cumsum(table.probs)
    i = min(int(np.searchsorted(cum, rng.random() * cum[-1], side="right")), table.size - 1)
    x = table.states[i]
    out = -np.ones((table.n, k), dtype=np.int8)
    for v in range(table.n):
        if x[v] > 0:
            out[v, int(rng.random() * k)] = 1
    return out.reshape(-1)


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class Trajectory:
    n: int
    spec: DynamicsSpec
    seed: int
    steps: np.ndarray
    codes: np.ndarray
    changed: np.ndarray = field(repr=False)

    @property
    def configs(self) -> np.ndarray:
        return spins_from_codes(self.codes, self.n)

    def frequencies(self) -> dict[int, float]:
        vals, counts = np.unique(self.codes, return_counts=True)
        return {int(c): cnt / self.codes.size for c, cnt in zip(vals, counts)}

    def tv_to(self, table: GibbsTable) -> float:
        freq = np.zeros(1 << self.n)
        vals, counts = np.unique(self.codes, return_counts=True)
        freq[vals] = counts / self.codes.size
        return 0.5 * float(np.abs(freq - table.full_probs).sum())

    def marginals(self) -> np.ndarray:
        return (self.configs > 0).mean(axis=0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "spins"])
        for s, c in zip(self.steps, self.configs):
            w.writerow([int(s), " ".join("+1" if x > 0 else "-1" for x in c)])
        return buf.getvalue()

    def summary(self, table: GibbsTable | None = None) -> dict:
        freq = self.frequencies()
        out = {
            "dynamics": self.spec.to_dict(),
            "seed": self.seed,
            "recorded": int(self.codes.size),
            "steps": int(self.steps[-1]) if self.steps.size else 0,
            "update_rate": float(self.changed.mean()) if self.changed.size else 0.0,
            "marginals": [float(x) for x in self.marginals()],
            "frequencies": {
                format_spins(spins_from_codes(np.array([c]), self.n)[0]): f for c, f in freq.items()
            },
        }
        if table is not None:
            out["tv_to_stationary"] = self.tv_to(table)
        return out

    def summary_json(self, table: GibbsTable | None = None) -> str:
        return json.dumps(self.summary(table), sort_keys=True, indent=2)


def run_chain(
    spec: DynamicsSpec,
    table: GibbsTable,
    start: Sequence[int],
    steps: int,
    seed: int,
    thin: int = 1,
    chunk: int = 65536,
) -> Trajectory:
    """Run ``steps`` transitions; records the start and every ``thin``-th state."""
    if steps < 0 or thin < 1:
        raise ValueError("steps must be >= 0 and thin >= 1")
    code = _check_feasible(table, np.asarray(start))
    kern = kernel_for(table, spec)
    rng = np.random.default_rng(seed)
    rec_steps = [0]
    rec_codes = [code]
    changed = np.zeros(steps, dtype=bool)
    step_fn = kern.step
    t = 0
    while t < steps:
        block = min(chunk, steps - t)
        U = rng.random((block, kern.draws)).tolist()
        for row in U:
            new = step_fn(code, row)
            changed[t] = new != code
            code = new
            t += 1
            if t % thin == 0:
                rec_steps.append(t)
                rec_codes.append(code)
    return Trajectory(
        n=table.n,
        spec=spec,
        seed=seed,
        steps=np.asarray(rec_steps),
        codes=np.asarray(rec_codes, dtype=np.int64),
        changed=changed,
    )


def with_inner_glauber(spec: DynamicsSpec, inner_steps: int) -> DynamicsSpec:
    return replace(spec, inner_steps=inner_steps)
