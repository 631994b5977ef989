"""Self-avoiding-walk trees, log-ratio recursions and potential certificates.

Extended reals are plain IEEE floats: ``-inf`` and ``+inf`` stand for the
log-ratio of a vertex forced to ``-1`` or ``+1``.  All evaluators treat these
endpoints explicitly instead of relying on overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .core import Graph, Pinning, TwoSpinSystem, enumerate_distribution, conditional_table
from .uniqueness import UniquenessQuery, decay_at_fixed_point

SAW_CAP = 100_000


@dataclass(frozen=True, eq=False)
class SawTree:
    """Tree of self-avoiding walks from ``root``; node 0 is the root.

    ``pin[i]`` is 0 for a free node and the imposed spin for a cycle-closing leaf.
    """

    graph: Graph
    root: int
    parent: np.ndarray
    vertex: np.ndarray
    depth: np.ndarray
    pin: np.ndarray
    children: tuple[tuple[int, ...], ...]

    @property
    def size(self) -> int:
        return int(self.vertex.size)

    @property
    def n_free(self) -> int:
        return int(np.sum(self.pin == 0))

    def copies(self, v: int) -> list[int]:
        """Free copies of base vertex ``v``."""
        return [i for i in range(self.size) if self.vertex[i] == v and self.pin[i] == 0]

    def as_graph(self) -> Graph:
        return Graph(self.size, tuple((int(self.parent[i]), i) for i in range(1, self.size)))

    def to_dot(self) -> str:
        lines = ["graph saw {"]
        for i in range(self.size):
            label = f"{int(self.vertex[i])}"
            if self.pin[i]:
                label += "+" if self.pin[i] > 0 else "-"
                lines.append(f'  n{i} [label="{label}", shape=box];')
            else:
                lines.append(f'  n{i} [label="{label}"];')
        for i in range(1, self.size):
            lines.append(f"  n{int(self.parent[i])} -- n{i};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def saw_tree(graph: Graph, root: int, ordering: Sequence[int] | None = None, cap: int = SAW_CAP) -> SawTree:
    """Enumerate walks from ``root``.

    A walk that steps back onto an earlier vertex ``w`` ends in a leaf copy of
    ``w``.  Writing the cycle as ``w -> a -> ... -> b -> w``, the leaf is pinned
    to ``+1`` when ``a`` precedes ``b`` in ``ordering`` and to ``-1`` otherwise.
    """
    if not graph.is_connected():
        raise ValueError("SAW trees need a connected graph")
    if not 0 <= root < graph.n:
        raise ValueError("root out of range")
    order = list(range(graph.n)) if ordering is None else list(ordering)
    if sorted(order) != list(range(graph.n)):
        raise ValueError("ordering must be a permutation of the vertices")
    rank = {v: i for i, v in enumerate(order)}
    parent, vertex, depth, pin = [-1], [root], [0], [0]
    children: list[list[int]] = [[]]
    # iterative DFS: (node id, walk as list, position map)
    stack = [(0, [root], {root: 0})]
    while stack:
        node, walk, pos = stack.pop()
        tip = walk[-1]
        prev = walk[-2] if len(walk) > 1 else None
        kids = []
        for w in graph.adjacency[tip]:
            if w == prev:
                continue
            if len(vertex) >= cap:
                raise ValueError(f"SAW tree exceeds {cap} nodes")
            idx = len(vertex)
            parent.append(node)
            vertex.append(w)
            depth.append(len(walk))
            children.append([])
            kids.append(idx)
            if w in pos:
                a = walk[pos[w] + 1]
                pin.append(1 if rank[a] < rank[tip] else -1)
            else:
                pin.append(0)
                npos = dict(pos)
                npos[w] = len(walk)
                stack.append((idx, walk + [w], npos))
        children[node] = kids
    return SawTree(
        graph,
        root,
        np.asarray(parent),
        np.asarray(vertex),
        np.asarray(depth),
        np.asarray(pin),
        tuple(tuple(c) for c in children),
    )


# ---------------------------------------------------------------------------
# recursions


def edge_factor_log(beta: float, gamma: float, y: float) -> float:
    """``log((beta e^y + 1)/(e^y + gamma))`` on the extended reals."""
    if y == -math.inf:
        return -math.log(gamma)
    if y == math.inf:
        return math.log(beta) if beta > 0 else -math.inf
    top = np.logaddexp(math.log(beta) + y, 0.0) if beta > 0 else 0.0
    return float(top - np.logaddexp(y, math.log(gamma)))


def h_value(beta: float, gamma: float, y: float) -> float:
    """Derivative of the log recursion in one coordinate; zero at the ends that decouple."""
    if y == -math.inf:
        return 0.0
    if y == math.inf:
        return 0.0 if beta > 0 else -(1.0 - beta * gamma)
    if y > 0:
        e = math.exp(-y)
        return -(1.0 - beta * gamma) * e / ((beta + e) * (1.0 + gamma * e))
    e = math.exp(y)
    return -(1.0 - beta * gamma) * e / ((beta * e + 1.0) * (e + gamma))


def h_array(beta: float, gamma: float, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    fin = np.isfinite(y)
    yf = y[fin]
    pos = yf > 0
    vals = np.empty_like(yf)
    e = np.exp(-yf[pos])
    vals[pos] = -(1.0 - beta * gamma) * e / ((beta + e) * (1.0 + gamma * e))
    e = np.exp(yf[~pos])
    vals[~pos] = -(1.0 - beta * gamma) * e / ((beta * e + 1.0) * (e + gamma))
    out[fin] = vals
    if beta == 0:
        out[y == np.inf] = -(1.0 - beta * gamma)
    return out


def log_recursion(beta: float, gamma: float, lam: float, ys: Sequence[float]) -> float:
    return math.log(lam) + sum(edge_factor_log(beta, gamma, y) for y in ys)


def _node_pins(saw: SawTree, pin: Pinning | None) -> np.ndarray:
    spins = saw.pin.copy()
    if pin is not None:
        d = pin.as_dict()
        if saw.root in d:
            raise ValueError("the root must stay free")
        for i in range(saw.size):
            if spins[i] == 0 and int(saw.vertex[i]) in d:
                spins[i] = d[int(saw.vertex[i])]
    return spins


def tree_log_ratios(saw: SawTree, system: TwoSpinSystem, pin: Pinning | None = None) -> np.ndarray:
    """Log marginal ratio of every node within its own subtree (bottom-up)."""
    spins = _node_pins(saw, pin)
    y = np.zeros(saw.size)
    for i in np.argsort(-saw.depth, kind="stable"):
        if spins[i] != 0:
            y[i] = math.inf if spins[i] > 0 else -math.inf
            continue
        lam = system.fields[int(saw.vertex[i])]
        y[i] = log_recursion(system.beta, system.gamma, lam, [y[c] for c in saw.children[i]])
    return y


def tree_marginal_ratios(saw: SawTree, system: TwoSpinSystem, pin: Pinning | None = None) -> np.ndarray:
    with np.errstate(over="ignore"):
        return np.exp(tree_log_ratios(saw, system, pin))


def tree_system(saw: SawTree, system: TwoSpinSystem) -> TwoSpinSystem:
    fields = tuple(system.fields[int(v)] for v in saw.vertex)
    return TwoSpinSystem(saw.as_graph(), system.beta, system.gamma, fields)


def tree_pinning(saw: SawTree, pin: Pinning | None = None) -> Pinning:
    spins = _node_pins(saw, pin)
    dom = [i for i in range(saw.size) if spins[i] != 0]
    return Pinning(tuple(dom), tuple(int(spins[i]) for i in dom))


def tree_signed_influences(saw: SawTree, system: TwoSpinSystem, pin: Pinning | None = None) -> np.ndarray:
    """Signed influence of the root on every node of the tree.

    Along a path the pairwise kernels are two-state, so the influence is the
    product of ``h`` at the log-ratios of the nodes below the root.
    """
    y = tree_log_ratios(saw, system, pin)
    spins = _node_pins(saw, pin)
    out = np.zeros(saw.size)
    if not math.isfinite(y[0]):
        return out
    out[0] = 1.0
    for i in np.argsort(saw.depth, kind="stable")[1:]:
        if spins[i] != 0:
            continue
        out[i] = out[saw.parent[i]] * h_value(system.beta, system.gamma, y[i])
    out[0] = 0.0
    return out


def tree_total_influence(saw: SawTree, system: TwoSpinSystem, pin: Pinning | None = None) -> float:
    """``sum_v deg(v) * |influence(root, v)|`` over free non-root nodes."""
    inf = tree_signed_influences(saw, system, pin)
    deg = np.asarray(system.graph.degrees)[saw.vertex]
    return float(np.sum(deg * np.abs(inf)))


def graph_signed_influences(system: TwoSpinSystem, root: int, pin: Pinning | None = None) -> np.ndarray:
    """Signed influence of ``root`` on each vertex, by exact enumeration."""
    table = enumerate_distribution(system)
    if pin is not None and pin.domain:
        table = conditional_table(table, pin)
    n = system.n
    plus = table.states > 0
    sel = [plus[:, root], ~plus[:, root]]
    mass = [table.probs[s].sum() for s in sel]
    out = np.zeros(n)
    if min(mass) <= 0:
        return out
    hi = table.probs[sel[0]] @ plus[sel[0]] / mass[0]
    lo = table.probs[sel[1]] @ plus[sel[1]] / mass[1]
    out = hi - lo
    out[root] = 0.0
    if pin is not None:
        out[list(pin.domain)] = 0.0
    return out


def influence_preservation_residual(system: TwoSpinSystem, root: int, pin: Pinning | None = None) -> float:
    """``max_u |I_G(root,u) - sum over free copies of u of I_T(root, copy)|``."""
    saw = saw_tree(system.graph, root)
    tree = tree_signed_influences(saw, system, pin)
    graph = graph_signed_influences(system, root, pin)
    spins = _node_pins(saw, pin)
    summed = np.zeros(system.n)
    for i in range(1, saw.size):
        if spins[i] == 0:
            summed[int(saw.vertex[i])] += tree[i]
    return float(np.abs(summed - graph).max())


# ---------------------------------------------------------------------------
# potentials


@dataclass(frozen=True)
class PotentialSpec:
    """Potential ``phi`` on log-ratios; ``kind`` is ``'sqrt'`` (``sqrt|h|``), ``'one'`` or ``'custom'``."""

    beta: float
    gamma: float
    kind: str = "sqrt"
    custom: Callable[[np.ndarray], np.ndarray] | None = None

    def h(self, y) -> np.ndarray:
        return h_array(self.beta, self.gamma, np.atleast_1d(np.asarray(y, dtype=float)))

    def phi(self, y) -> np.ndarray:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if self.kind == "sqrt":
            return np.sqrt(np.abs(self.h(y)))
        if self.kind == "one":
            return np.ones_like(y)
        if self.custom is None:
            raise ValueError("custom potential needs an evaluator")
        return np.asarray(self.custom(y), dtype=float)

    def h_phi(self, y) -> np.ndarray:
        hy = np.abs(self.h(y))
        ph = self.phi(y)
        out = np.zeros_like(hy)
        nz = hy > 0
        out[nz] = hy[nz] / ph[nz]
        return out


def image_interval(beta: float, gamma: float, lam: float, d: int) -> tuple[float, float]:
    """Range of the log recursion with ``d`` children."""
    if d == 0:
        return (math.log(lam), math.log(lam))
    top = math.log(lam) - d * math.log(gamma)
    if beta == 0:
        return (-math.inf, top)
    bottom = math.log(lam) + d * math.log(beta)
    return (min(bottom, top), max(bottom, top))


@dataclass(frozen=True)
class ContractionCertificate:
    alpha_hat: float
    x_star: float
    probe_max: float
    bound: float
    passed: bool
    precondition: bool
    label: str = "numeric certificate"

    def to_dict(self) -> dict:
        return {
            "alpha_hat": self.alpha_hat,
            "x_star": self.x_star,
            "probe_max": self.probe_max,
            "bound": self.bound,
            "pass": self.passed,
            "precondition": self.precondition,
            "label": self.label,
        }


def contraction_value(spec: PotentialSpec, lam: float, ys: Sequence[float]) -> float:
    """``phi(H(ys)) * sum_i h_phi(ys_i)``."""
    y = log_recursion(spec.beta, spec.gamma, lam, ys)
    return float(spec.phi(y)[0] * spec.h_phi(np.asarray(ys, dtype=float)).sum())


def edge_factor_log_array(beta: float, gamma: float, y: np.ndarray) -> np.ndarray:
    """Vectorised :func:`edge_factor_log`."""
    y = np.asarray(y, dtype=float)
    out = np.empty_like(y)
    lo, hi = y == -np.inf, y == np.inf
    fin = ~(lo | hi)
    out[lo] = -math.log(gamma)
    out[hi] = math.log(beta) if beta > 0 else -np.inf
    yf = y[fin]
    top = np.logaddexp(math.log(beta) + yf, 0.0) if beta > 0 else 0.0
    out[fin] = top - np.logaddexp(yf, math.log(gamma))
    return out


def contraction_values(spec: PotentialSpec, lam: float, ys: np.ndarray) -> np.ndarray:
    """Row-wise :func:`contraction_value` for an ``(m, d)`` array of inputs."""
    ys = np.asarray(ys, dtype=float)
    y = math.log(lam) + edge_factor_log_array(spec.beta, spec.gamma, ys).sum(axis=1)
    hp = spec.h_phi(ys.ravel()).reshape(ys.shape).sum(axis=1)
    return spec.phi(y) * hp


def symmetric_contraction(spec: PotentialSpec, lam: float, d: int, logx: np.ndarray) -> np.ndarray:
    logx = np.asarray(logx, dtype=float)
    ylog = math.log(lam) + d * edge_factor_log_array(spec.beta, spec.gamma, logx)
    return spec.phi(ylog) * d * spec.h_phi(logx)


def contraction_certificate(
    spec: PotentialSpec,
    lam: float,
    d: int,
    delta: float,
    n_grid: int = 2048,
    n_probes: int = 1000,
    seed: int = 0,
) -> ContractionCertificate:
    """Maximise the contraction sum over symmetric inputs, then probe asymmetric ones."""
    q = UniquenessQuery(spec.beta, spec.gamma, lam)
    pre = decay_at_fixed_point(q, d) <= 1 - delta + 1e-12
    grid = np.linspace(-40.0, 40.0, n_grid)
    vals = symmetric_contraction(spec, lam, d, grid)
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, n_grid - 1)]
    best, best_y = float(vals[i]), float(grid[i])
    if hi > lo:
        res = minimize_scalar(
            lambda t: -float(symmetric_contraction(spec, lam, d, np.array([t]))[0]),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-10},
        )
        if -res.fun > best:
            best, best_y = float(-res.fun), float(res.x)
    ends = symmetric_contraction(spec, lam, d, np.array([-np.inf, np.inf]))
    if ends.max() > best:
        best = float(ends.max())
    rng = np.random.default_rng(seed)
    ys = rng.uniform(-30.0, 30.0, size=(n_probes, d))
    ys[rng.random((n_probes, d)) < 0.05] = -np.inf
    ys[rng.random((n_probes, d)) < 0.05] = np.inf
    probe = float(contraction_values(spec, lam, ys).max()) if n_probes else 0.0
    bound = math.sqrt(1 - delta)
    top = max(best, probe)
    return ContractionCertificate(best, math.exp(best_y), probe, bound, bool(top <= bound + 1e-9), bool(pre))


def max_abs_h(spec: PotentialSpec, interval: tuple[float, float], fn: str = "h", n_grid: int = 2048) -> float:
    """Grid maximum of ``|h|``, ``phi`` or ``h_phi`` over an interval of log-ratios."""
    a, b = interval
    lo = max(a, -40.0)
    hi = min(b, 40.0)
    pts = [a, b]
    if hi >= lo:
        pts += list(np.linspace(lo, hi, n_grid))
    if spec.beta > 0:
        peak = 0.5 * math.log(spec.gamma / spec.beta)
        pts.append(min(max(peak, a), b))
    arr = np.asarray(pts, dtype=float)
    vals = {"h": lambda z: np.abs(spec.h(z)), "phi": spec.phi, "h_phi": spec.h_phi}[fn](arr)
    return float(np.max(vals))


@dataclass(frozen=True)
class BoundednessCertificate:
    value: float
    bound: float
    passed: bool
    label: str = "numeric certificate"

    def to_dict(self) -> dict:
        return {"c_hat": self.value, "bound": self.bound, "pass": self.passed, "label": self.label}


def boundedness_certificate(
    spec: PotentialSpec, lam1: float, lam2: float, d1: int, d2: int
) -> BoundednessCertificate:
    """Max of ``phi(y1) * h_phi(y2)`` over the two image intervals vs ``72/(d1+d2+2)``."""
    J1 = image_interval(spec.beta, spec.gamma, lam1, d1)
    J2 = image_interval(spec.beta, spec.gamma, lam2, d2)
    val = max_abs_h(spec, J1, "phi") * max_abs_h(spec, J2, "h_phi")
    bound = 72.0 / (d1 + d2 + 2)
    return BoundednessCertificate(val, bound, bool(val <= bound + 1e-9))


def envelope_holds(beta: float, gamma: float, lam: float, lam_v: float, d: int) -> bool:
    """``max |h|`` over the interval for ``lam_v`` stays below that for ``lam``."""
    spec = PotentialSpec(beta, gamma)
    left = max_abs_h(spec, image_interval(beta, gamma, lam_v, d))
    right = max_abs_h(spec, image_interval(beta, gamma, lam, d))
    return left <= right + 1e-12


def certified_si_bound(system: TwoSpinSystem, n_grid: int = 512, n_probes: int = 200) -> tuple[float, float, float]:
    """Numeric ``(alpha, c, 2c/alpha)`` for ``sqrt|h|`` on a system with local fields."""
    spec = PotentialSpec(system.beta, system.gamma)
    degs = system.graph.degrees
    worst = 0.0
    for v, lam in enumerate(system.fields):
        d = degs[v] - 1
        if d >= 1:
            q = UniquenessQuery(system.beta, system.gamma, lam)
            delta = max(0.0, 1 - decay_at_fixed_point(q, d))
            cert = contraction_certificate(spec, lam, d, delta, n_grid=n_grid, n_probes=n_probes)
            worst = max(worst, cert.alpha_hat, cert.probe_max)
    alpha = 1.0 - worst
    c = 0.0
    for u in range(system.n):
        for v in range(system.n):
            du, dv = max(degs[u] - 1, 0), max(degs[v] - 1, 0)
            val = boundedness_certificate(spec, system.fields[v], system.fields[u], dv, du).value
            c = max(c, val * (degs[u] + degs[v]) / 2)
    return alpha, c, (2 * c / alpha if alpha > 0 else math.inf)
