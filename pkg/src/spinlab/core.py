"""Graphs, two-spin systems and exact Gibbs enumeration.

Configurations are ``int8`` vectors over ``{-1, +1}``.  A configuration is
also identified with an integer *code* whose bit ``n - 1 - v`` is set iff
vertex ``v`` carries ``+1``; sorting codes ascending therefore yields the
lexicographic order over spin vectors with ``-1 < +1``, which is the
canonical state order used everywhere in the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

TABLE_CAP = 16
MATRIX_CAP = 12

Configuration = np.ndarray
FieldLike = Union[float, Sequence[float], np.ndarray]


class InfeasiblePinning(ValueError):
    """Raised when a pinning has zero conditional mass."""


# ---------------------------------------------------------------------------
# graphs


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices ``0..n-1``."""

    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("graph needs at least one vertex")
        seen: set[tuple[int, int]] = set()
        norm = []
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={self.n}")
            e = (min(u, v), max(u, v))
            if e in seen:
                raise ValueError(f"duplicate edge {e}")
            seen.add(e)
            norm.append(e)
        object.__setattr__(self, "edges", tuple(sorted(norm)))

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        nbrs: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        return tuple(tuple(sorted(a)) for a in nbrs)

    @cached_property
    def degrees(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.adjacency)

    @property
    def max_degree(self) -> int:
        return max(self.degrees)

    @property
    def m(self) -> int:
        return len(self.edges)

    def is_connected(self) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for w in self.adjacency[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n

    def relabel(self, perm: Sequence[int]) -> "Graph":
        """Graph with vertex ``v`` renamed ``perm[v]``."""
        return Graph(self.n, tuple((perm[u], perm[v]) for u, v in self.edges))

    def to_edge_list(self) -> str:
        lines = [f"{self.n} {self.m}"]
        lines += [f"{u} {v}" for u, v in self.edges]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edge_list(cls, text: str) -> "Graph":
        """Parse ``n m`` followed by ``m`` lines ``u v``; ``#`` lines are comments."""
        rows = []
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if line:
                rows.append(line.split())
        if not rows:
            raise ValueError("empty edge list")
        if len(rows[0]) != 2:
            raise ValueError("header must be 'n m'")
        n, m = int(rows[0][0]), int(rows[0][1])
        body = rows[1:]
        if len(body) != m:
            raise ValueError(f"header announces {m} edges, found {len(body)}")
        edges = []
        for r in body:
            if len(r) != 2:
                raise ValueError(f"bad edge line: {' '.join(r)}")
            u, v = int(r[0]), int(r[1])
            if not u < v:
                raise ValueError(f"edge lines need u < v, got {u} {v}")
            edges.append((u, v))
        return cls(n, tuple(edges))

    @classmethod
    def read(cls, path: Union[str, Path]) -> "Graph":
        return cls.from_edge_list(Path(path).read_text())


def path_graph(n: int) -> Graph:
    return Graph(n, tuple((i, i + 1) for i in range(n - 1)))


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    return Graph(n, tuple((i, (i + 1) % n) for i in range(n)))


def complete_graph(n: int) -> Graph:
    return Graph(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))


def star_graph(leaves: int) -> Graph:
    """Centre 0 joined to ``leaves`` leaves."""
    return Graph(leaves + 1, tuple((0, i) for i in range(1, leaves + 1)))


def empty_graph(n: int) -> Graph:
    return Graph(n, ())


def all_graphs(n: int, connected: bool = False) -> list[Graph]:
    """Every graph on ``n <= 7`` vertices up to isomorphism (networkx atlas)."""
    import networkx as nx

    if not 1 <= n <= 7:
        raise ValueError("atlas covers 1 <= n <= 7")
    out = []
    for g in nx.graph_atlas_g():
        if g.number_of_nodes() != n:
            continue
        if connected and not nx.is_connected(g):
            continue
        out.append(Graph(n, tuple(tuple(e) for e in g.edges())))
    return out


def named_graph(spec: str) -> Graph:
    """Build ``path:4``, ``cycle:5``, ``complete:3``, ``star:3``, ``empty:2`` or ``edge``."""
    if spec == "edge":
        return path_graph(2)
    kind, _, arg = spec.partition(":")
    makers = {
        "path": path_graph,
        "cycle": cycle_graph,
        "complete": complete_graph,
        "star": star_graph,
        "empty": empty_graph,
    }
    if kind not in makers or not arg:
        raise ValueError(f"unknown graph spec {spec!r}")
    return makers[kind](int(arg))


# ---------------------------------------------------------------------------
# systems


@dataclass(frozen=True)
class TwoSpinSystem:
    """Edge interaction ``(beta, gamma)`` with per-vertex activities ``fields``."""

    graph: Graph
    beta: float
    gamma: float
    fields: tuple[float, ...]

    def __post_init__(self) -> None:
        beta, gamma = float(self.beta), float(self.gamma)
        if beta < 0:
            raise ValueError("beta must be nonnegative")
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        if beta > gamma:
            raise ValueError("need beta <= gamma")
        fields = tuple(float(x) for x in self.fields)
        if len(fields) != self.graph.n:
            raise ValueError("one field per vertex required")
        if any(not (x > 0) or not math.isfinite(x) for x in fields):
            raise ValueError("fields must be positive and finite")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "fields", fields)

    @classmethod
    def uniform(cls, graph: Graph, beta: float, gamma: float, lam: float) -> "TwoSpinSystem":
        return cls(graph, beta, gamma, (lam,) * graph.n)

    @classmethod
    def hardcore(cls, graph: Graph, lam: float) -> "TwoSpinSystem":
        return cls.uniform(graph, 0.0, 1.0, lam)

    @classmethod
    def ising(cls, graph: Graph, beta: float, lam: float = 1.0) -> "TwoSpinSystem":
        return cls.uniform(graph, beta, beta, lam)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def antiferromagnetic(self) -> bool:
        return self.beta * self.gamma < 1.0

    @property
    def fields_array(self) -> np.ndarray:
        return np.asarray(self.fields, dtype=float)

    def params(self) -> dict:
        lam = self.fields
        scalar = all(x == lam[0] for x in lam)
        return {
            "beta": self.beta,
            "gamma": self.gamma,
            "lambda": lam[0] if scalar else list(lam),
        }


def _broadcast(phi: FieldLike, n: int) -> np.ndarray:
    arr = np.asarray(phi, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    if arr.shape != (n,):
        raise ValueError(f"field vector must have length {n}")
    if np.any(~(arr > 0)) or np.any(~np.isfinite(arr)):
        raise ValueError("fields must be positive")
    return arr


def magnetize(system: TwoSpinSystem, phi: FieldLike) -> TwoSpinSystem:
    """Multiply every activity by the matching local field."""
    arr = _broadcast(phi, system.n)
    return TwoSpinSystem(system.graph, system.beta, system.gamma, tuple(system.fields_array * arr))


def gibbs_weight(system: TwoSpinSystem, sigma: Sequence[int]) -> float:
    sigma = np.asarray(sigma)
    if sigma.shape != (system.n,):
        raise ValueError("configuration length does not match the graph")
    m_plus = m_minus = 0
    for u, v in system.graph.edges:
        if sigma[u] == sigma[v]:
            if sigma[u] == 1:
                m_plus += 1
            else:
                m_minus += 1
    w = system.beta**m_plus * system.gamma**m_minus  # 0.0**0 == 1.0
    for v in range(system.n):
        if sigma[v] == 1:
            w *= system.fields[v]
    return float(w)


# ---------------------------------------------------------------------------
# codes


def spins_from_codes(codes: np.ndarray, n: int) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    bits = (codes[:, None] >> shifts[None, :]) & 1
    return (2 * bits - 1).astype(np.int8)


def codes_from_spins(spins: np.ndarray) -> np.ndarray:
    spins = np.atleast_2d(np.asarray(spins))
    n = spins.shape[1]
    weights = 1 << np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((spins > 0).astype(np.int64) * weights).sum(axis=1)


def bit(v: int, n: int) -> int:
    return 1 << (n - 1 - v)


def format_spins(sigma: Iterable[int]) -> str:
    return "".join("+" if s > 0 else "-" for s in sigma)


@dataclass(frozen=True)
class Pinning:
    """Spins fixed on a vertex subset."""

    domain: tuple[int, ...] = ()
    values: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        dom = tuple(int(v) for v in self.domain)
        val = tuple(int(s) for s in self.values)
        if len(dom) != len(val):
            raise ValueError("domain and values differ in length")
        if len(set(dom)) != len(dom):
            raise ValueError("repeated vertex in pinning")
        if any(s not in (-1, 1) for s in val):
            raise ValueError("pinned spins must be -1 or +1")
        order = sorted(range(len(dom)), key=dom.__getitem__)
        object.__setattr__(self, "domain", tuple(dom[i] for i in order))
        object.__setattr__(self, "values", tuple(val[i] for i in order))

    @classmethod
    def from_dict(cls, d: Mapping[int, int]) -> "Pinning":
        items = sorted(d.items())
        return cls(tuple(k for k, _ in items), tuple(v for _, v in items))

    def as_dict(self) -> dict[int, int]:
        return dict(zip(self.domain, self.values))

    def merge(self, other: "Pinning") -> "Pinning":
        d = self.as_dict()
        for v, s in other.as_dict().items():
            if d.get(v, s) != s:
                raise InfeasiblePinning(f"conflicting values at vertex {v}")
            d[v] = s
        return Pinning.from_dict(d)

    def masks(self, n: int) -> tuple[int, int]:
        """Bit mask of the domain and of the ``+1`` pinned vertices."""
        dom = plus = 0
        for v, s in zip(self.domain, self.values):
            if not 0 <= v < n:
                raise ValueError(f"pinned vertex {v} out of range")
            dom |= bit(v, n)
            if s > 0:
                plus |= bit(v, n)
        return dom, plus

    def ternary(self, n: int) -> int:
        """Index into ``partial_masses`` (digit 0: -1, 1: +1, 2: free)."""
        d = self.as_dict()
        idx = 0
        for v in range(n):
            s = d.get(v)
            idx = 3 * idx + (2 if s is None else (1 if s > 0 else 0))
        return idx


def all_pinnings(n: int) -> Iterable[Pinning]:
    """All ``3**n`` partial assignments in ternary-index order."""
    for idx in range(3**n):
        dom, val = [], []
        rest = idx
        digits = []
        for _ in range(n):
            digits.append(rest % 3)
            rest //= 3
        digits.reverse()
        for v, dgt in enumerate(digits):
            if dgt != 2:
                dom.append(v)
                val.append(1 if dgt == 1 else -1)
        yield Pinning(tuple(dom), tuple(val))


# ---------------------------------------------------------------------------
# tables


@dataclass(frozen=True, eq=False)
class GibbsTable:
    """Exact distribution over the feasible configurations, in canonical order."""

    n: int
    codes: np.ndarray
    probs: np.ndarray
    Z: float
    pinning: Pinning = field(default_factory=Pinning)
    system: TwoSpinSystem | None = None

    def __post_init__(self) -> None:
        codes = np.asarray(self.codes, dtype=np.int64)
        probs = np.asarray(self.probs, dtype=float)
        if codes.shape != probs.shape or codes.ndim != 1 or codes.size == 0:
            raise ValueError("codes and probs must be matching nonempty vectors")
        if np.any(np.diff(codes) <= 0):
            order = np.argsort(codes)
            codes, probs = codes[order], probs[order]
        if np.any(probs <= 0):
            raise ValueError("table keeps only positive-probability states")
        if abs(probs.sum() - 1.0) > 1e-12:
            probs = probs / probs.sum()
        codes.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "probs", probs)

    @property
    def size(self) -> int:
        return int(self.codes.size)

    @cached_property
    def states(self) -> np.ndarray:
        s = spins_from_codes(self.codes, self.n)
        s.setflags(write=False)
        return s

    @cached_property
    def position(self) -> np.ndarray:
        """Map code -> row index (or -1)."""
        pos = np.full(1 << self.n, -1, dtype=np.int64)
        pos[self.codes] = np.arange(self.size)
        return pos

    @cached_property
    def full_probs(self) -> np.ndarray:
        p = np.zeros(1 << self.n)
        p[self.codes] = self.probs
        return p

    @cached_property
    def free_vertices(self) -> tuple[int, ...]:
        pinned = set(self.pinning.domain)
        return tuple(v for v in range(self.n) if v not in pinned)

    def prob(self, sigma: Sequence[int]) -> float:
        c = int(codes_from_spins(np.asarray(sigma)[None, :])[0])
        i = self.position[c]
        return float(self.probs[i]) if i >= 0 else 0.0

    def index(self, sigma: Sequence[int]) -> int:
        c = int(codes_from_spins(np.asarray(sigma)[None, :])[0])
        i = int(self.position[c])
        if i < 0:
            raise KeyError(f"{format_spins(sigma)} is not in the support")
        return i

    def marginal_plus(self) -> np.ndarray:
        """Probability of ``+1`` at each vertex."""
        return (self.states > 0).T.astype(float) @ self.probs

    def expectation(self, f: np.ndarray) -> float:
        return float(np.dot(self.probs, f))

    @property
    def min_prob(self) -> float:
        return float(self.probs.min())


def table_from_weights(
    n: int,
    codes: np.ndarray,
    log_weights: np.ndarray,
    pinning: Pinning | None = None,
    system: TwoSpinSystem | None = None,
) -> GibbsTable:
    """Normalise log-weights (``-inf`` drops a state) into a table."""
    keep = np.isfinite(log_weights)
    if not np.any(keep):
        raise ValueError("all weights vanish")
    codes = np.asarray(codes)[keep]
    lw = np.asarray(log_weights)[keep]
    top = lw.max()
    w = np.exp(lw - top)
    total = w.sum()
    return GibbsTable(
        n=n,
        codes=codes,
        probs=w / total,
        Z=float(math.exp(top) * total) if top < 700 else math.inf,
        pinning=pinning or Pinning(),
        system=system,
    )


def log_weights(system: TwoSpinSystem, spins: np.ndarray) -> np.ndarray:
    """Vectorised ``log`` of the Gibbs weight; ``-inf`` for zero weight."""
    spins = np.asarray(spins)
    if spins.ndim != 2 or spins.shape[1] != system.n:
        raise ValueError("configuration length does not match the graph")
    plus = spins > 0
    if system.graph.m:
        e = np.asarray(system.graph.edges)
        pp = (plus[:, e[:, 0]] & plus[:, e[:, 1]]).sum(axis=1)
        mm = (~plus[:, e[:, 0]] & ~plus[:, e[:, 1]]).sum(axis=1)
    else:
        pp = mm = np.zeros(spins.shape[0], dtype=int)
    with np.errstate(divide="ignore"):
        lb = math.log(system.beta) if system.beta > 0 else -math.inf
    lw = mm * math.log(system.gamma) + plus @ np.log(system.fields_array)
    lw = np.where(pp > 0, lw + pp * lb if math.isfinite(lb) else -np.inf, lw)
    return lw


def enumerate_distribution(system: TwoSpinSystem, cap: int = TABLE_CAP) -> GibbsTable:
    n = system.n
    if n > cap:
        raise ValueError(f"exact enumeration capped at n <= {cap}, got n={n}")
    codes = np.arange(1 << n, dtype=np.int64)
    lw = log_weights(system, spins_from_codes(codes, n))
    assert np.isfinite(lw[0]), "the all-minus configuration must carry positive weight"
    return table_from_weights(n, codes, lw, system=system)


def conditional_table(table: GibbsTable, pin: Pinning) -> GibbsTable:
    dom, plus = pin.masks(table.n)
    keep = (table.codes & dom) == plus
    if not np.any(keep):
        raise InfeasiblePinning(f"pinning {pin.as_dict()} has zero mass")
    mass = table.probs[keep].sum()
    merged = table.pinning.merge(pin)
    return GibbsTable(
        n=table.n,
        codes=table.codes[keep],
        probs=table.probs[keep] / mass,
        Z=table.Z * float(mass),
        pinning=merged,
        system=table.system,
    )


def magnetize_table(table: GibbsTable, phi: FieldLike) -> GibbsTable:
    """Reweight a table by ``prod_{v: sigma_v=+1} phi_v`` and renormalise."""
    arr = _broadcast(phi, table.n)
    lw = np.log(table.probs) + (table.states > 0) @ np.log(arr)
    system = magnetize(table.system, arr) if table.system is not None else None
    out = table_from_weights(table.n, table.codes, lw, pinning=table.pinning, system=system)
    return GibbsTable(out.n, out.codes, out.probs, table.Z * out.Z, out.pinning, out.system)


def flip(table: GibbsTable, chi: Sequence[int]) -> GibbsTable:
    """Distribution of ``sigma * chi`` when ``sigma`` follows ``table``."""
    chi = np.asarray(chi)
    if chi.shape != (table.n,) or np.any(np.abs(chi) != 1):
        raise ValueError("direction must be a +-1 vector of length n")
    mask = sum(bit(v, table.n) for v in range(table.n) if chi[v] < 0)
    new_codes = table.codes ^ mask
    order = np.argsort(new_codes)
    pin = table.pinning
    flipped = Pinning(pin.domain, tuple(s * int(chi[v]) for v, s in zip(pin.domain, pin.values)))
    return GibbsTable(table.n, new_codes[order], table.probs[order], table.Z, flipped, None)


def partial_masses(table: GibbsTable) -> np.ndarray:
    """Mass of every partial assignment, as a flat array of length ``3**n``.

    Entry ``Pinning.ternary(n)`` holds the probability that the configuration
    agrees with that partial assignment.
    """
    n = table.n
    arr = table.full_probs.reshape((2,) * n) if n else table.full_probs
    for axis in range(n):
        arr = np.concatenate([arr, arr.sum(axis=axis, keepdims=True)], axis=axis)
    return arr.reshape(-1)
