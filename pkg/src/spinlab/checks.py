"""Sweep suites that check the inequalities and identities on small instances.

Every suite returns a :class:`SuiteResult` holding the worst observed margin,
so a suite either passes on all instances or names the worst offender.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Iterator

import numpy as np

from .analysis import (
    TransitionMatrix,
    detailed_balance_residual,
    field_dirichlet_identity_check,
    field_matrix,
    first_time_below,
    gap,
    glauber_gap,
    glauber_matrix,
    min_gap,
    mixing_time_bound,
    projected_matrix,
    block_matrix,
    spectral_report,
    stationarity_residual,
    transition_matrix,
)
from .core import (
    Graph,
    TwoSpinSystem,
    all_graphs,
    enumerate_distribution,
    path_graph,
)
from .coupling import (
    WeightedHamming,
    coupling_gap_bridge,
    magnetize_good,
    path_coupling_certificate,
)
from .dynamics import (
    DynamicsSpec,
    HyperGeoParams,
    hypergeo_pmf,
    hypergeo_sample,
    hypergeo_support,
    k_transform_table,
    run_chain,
)
from .influence import complete_si_estimate, max_spectral_radius
from .trees import (
    PotentialSpec,
    boundedness_certificate,
    contraction_certificate,
    influence_preservation_residual,
)
from .uniqueness import (
    UniquenessQuery,
    decay,
    decay_at_fixed_point,
    fixed_point,
    ising_interval,
    lambda_c,
    solved_gap,
)

# Antiferromagnetic parameter grid shared by the sweeps: (beta, gamma, lambda).
PARAM_GRID: tuple[tuple[float, float, float], ...] = (
    tuple((0.0, 1.0, lam) for lam in (0.5, 1.0, 2.0))
    + tuple((b, b, lam) for b in (0.3, 0.6) for lam in (0.5, 1.0, 1.5))
    + tuple((b, g, lam) for b, g in ((0.2, 1.5), (0.5, 1.2), (0.1, 3.0)) for lam in (0.7, 2.0))
)
THETAS: tuple[float, ...] = (0.2, 0.5, 0.8)

# Distance between the projected block chain and the field dynamics on the
# edge hardcore model (lambda = 1, theta = 1/2) works out to 1/(8(2k-1)) at
# block size k*theta*n; frozen here for k = 64.
LIMIT_K64 = 1.0 / 1016.0
LIMIT_THRESHOLD = LIMIT_K64 + 1e-12

GOLDEN: dict[str, float] = {
    "lambda_c_3": 4.0,
    "lambda_c_4": 1.6875,
    "hardcore_fixed_point_lambda4_d2": 1.0,
    "hardcore_decay_lambda4_d2": 1.0,
    "edge_hardcore_glauber_gap": 0.25,
}


@dataclass
class SuiteResult:
    """Outcome of one sweep: ``worst`` is the smallest slack (negative = violation)."""

    name: str
    passed: bool
    instances: int
    worst: float
    witness: dict = field(default_factory=dict)
    elapsed: float = 0.0
    notes: list[str] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.name}: {self.instances} instances, worst slack {self.worst:.3e}, {self.elapsed:.1f}s"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "pass": self.passed,
            "instances": self.instances,
            "worst_slack": self.worst,
            "witness": self.witness,
            "elapsed": round(self.elapsed, 3),
            "notes": self.notes,
            "details": self.details,
        }


class _Tracker:
    def __init__(self, name: str):
        self.name = name
        self.count = 0
        self.worst = math.inf
        self.witness: dict = {}
        self.notes: list[str] = []
        self.details: dict = {}
        self.start = time.perf_counter()

    def add(self, slack: float, **witness) -> None:
        self.count += 1
        if slack < self.worst:
            self.worst = float(slack)
            self.witness = witness

    def done(self) -> SuiteResult:
        worst = self.worst if self.count else 0.0
        return SuiteResult(
            self.name,
            bool(worst >= 0),
            self.count,
            worst,
            self.witness,
            time.perf_counter() - self.start,
            self.notes,
            self.details,
        )


def graph_sweep(nmax: int, connected: bool = True, nmin: int = 1) -> Iterator[Graph]:
    for n in range(nmin, nmax + 1):
        yield from all_graphs(n, connected)


def _gname(g: Graph) -> str:
    return f"n={g.n} E={list(g.edges)}"


# ---------------------------------------------------------------------------


def golden_suite(values: dict[str, float] | None = None) -> SuiteResult:
    """Exact reference values; ``values`` may override the expected numbers."""
    expect = dict(GOLDEN)
    if values:
        expect.update(values)
    t = _Tracker("golden values")
    t.add(0.0 if Fraction(lambda_c(3)) == Fraction(expect["lambda_c_3"]) else -1.0, key="lambda_c_3")
    t.add(0.0 if Fraction(lambda_c(4)) == Fraction(expect["lambda_c_4"]) else -1.0, key="lambda_c_4")
    q = UniquenessQuery(0.0, 1.0, 4.0)
    x = fixed_point(q, 2)
    t.add(1e-10 - abs(x - expect["hardcore_fixed_point_lambda4_d2"]), key="fixed_point", value=x)
    f = decay(0.0, 1.0, 2, x)
    t.add(1e-10 - abs(f - expect["hardcore_decay_lambda4_d2"]), key="decay", value=f)
    g = glauber_gap(enumerate_distribution(TwoSpinSystem.hardcore(path_graph(2), 1.0)))
    t.add(1e-10 - abs(g - expect["edge_hardcore_glauber_gap"]), key="edge_gap", value=g)
    return t.done()


def load_golden(path: str | Path) -> dict[str, float]:
    data = json.loads(Path(path).read_text())
    unknown = set(data) - set(GOLDEN)
    if unknown:
        raise ValueError(f"unknown golden keys: {sorted(unknown)}")
    return {k: float(v) for k, v in data.items()}


def reversibility_suite(nmax: int = 5, thetas: Iterable[float] = THETAS, tol: float = 1e-10) -> SuiteResult:
    t = _Tracker("field dynamics reversibility")
    for g in graph_sweep(nmax):
        for b, gm, lam in PARAM_GRID:
            table = enumerate_distribution(TwoSpinSystem.uniform(g, b, gm, lam))
            for th in thetas:
                P = TransitionMatrix(table, field_matrix(table, th), DynamicsSpec.field(th))
                db, st = detailed_balance_residual(P), stationarity_residual(P)
                t.add(tol - max(db, st), graph=_gname(g), params=[b, gm, lam], theta=th, db=db, stat=st)
    return t.done()


def dirichlet_suite(nmax: int = 4, n_obs: int = 20, seed: int = 0, tol: float = 1e-9) -> SuiteResult:
    t = _Tracker("field dynamics Dirichlet identity")
    rng = np.random.default_rng(seed)
    for g in graph_sweep(nmax, connected=False):
        for b, gm, lam in PARAM_GRID:
            table = enumerate_distribution(TwoSpinSystem.uniform(g, b, gm, lam))
            for th in THETAS:
                for _ in range(n_obs):
                    f = rng.standard_normal(table.size)
                    res = field_dirichlet_identity_check(table, th, f)
                    t.add(tol - res, graph=_gname(g), params=[b, gm, lam], theta=th, residual=res)
    return t.done()


def comparison_suite(nmax: int = 5, thetas: Iterable[float] = THETAS, slack: float = 1e-9) -> SuiteResult:
    """Glauber gap against field gap times the worst pinned Glauber gap of the magnetized law."""
    t = _Tracker("comparison lemma")
    for g in graph_sweep(nmax):
        for b, gm, lam in PARAM_GRID:
            table = enumerate_distribution(TwoSpinSystem.uniform(g, b, gm, lam))
            gd = glauber_gap(table, pick="all")
            for th in thetas:
                fd = gap(TransitionMatrix(table, field_matrix(table, th), DynamicsSpec.field(th)))
                mg = min_gap(enumerate_distribution(TwoSpinSystem.uniform(g, b, gm, lam * th))).value
                t.add(gd - fd * mg + slack, graph=_gname(g), params=[b, gm, lam], theta=th, gd=gd, fd=fd, min_gap=mg)
    return t.done()


def projected_distance(k: int, theta: float = 0.5, lam: float = 1.0) -> float:
    table = enumerate_distribution(TwoSpinSystem.hardcore(path_graph(2), lam))
    ell = math.ceil(theta * k * table.n)
    return float(np.abs(projected_matrix(table, k, ell) - field_matrix(table, theta)).max())


def limit_suite(threshold: float = LIMIT_THRESHOLD) -> SuiteResult:
    t = _Tracker("projected block limit")
    d2, d64 = projected_distance(2), projected_distance(64)
    t.add(d2 - d64, key="monotone", k2=d2, k64=d64)
    t.add(threshold - d64, key="threshold", k64=d64, threshold=threshold)
    t.details = {"k2": d2, "k64": d64, "threshold": threshold}
    return t.done()


def block_suite(nmax: int = 5, slack: float = 1e-9) -> SuiteResult:
    t = _Tracker("block dynamics gap bound")
    vacuous = 0
    for g in graph_sweep(nmax):
        n = g.n
        for b, gm, lam in PARAM_GRID:
            table = enumerate_distribution(TwoSpinSystem.uniform(g, b, gm, lam))
            eta, _ = max_spectral_radius(table)
            e = math.ceil(eta - 1e-12)
            ells = range(max(2 * e, 1), n + 1)
            if not ells:
                vacuous += 1
            for ell in ells:
                P = TransitionMatrix(table, block_matrix(table, ell), DynamicsSpec.block(ell))
                lhs = gap(P)
                rhs = (ell / (2 * n)) ** (2 * e + 1)
                t.add(lhs - rhs + slack, graph=_gname(g), params=[b, gm, lam], ell=ell, eta=eta, gap=lhs, bound=rhs)
    t.notes.append(f"{vacuous} (graph, parameter) pairs had 2*ceil(eta) > n and no admissible block size")
    return t.done()


def mixing_suite(nmax: int = 5, thetas: Iterable[float] = THETAS, n_random: int = 20) -> SuiteResult:
    """Field gap against ``(theta/2)^(2 eta + 7)`` with a grid lower estimate of eta."""
    t = _Tracker("field dynamics mixing lemma")
    refined = 0
    for g in graph_sweep(nmax):
        for b, gm, lam in PARAM_GRID:
            table = enumerate_distribution(TwoSpinSystem.uniform(g, b, gm, lam))
            eta = complete_si_estimate(table, n_random=n_random).eta_hat
            for th in thetas:
                fd = gap(TransitionMatrix(table, field_matrix(table, th), DynamicsSpec.field(th)))
                rhs = (th / 2) ** (2 * eta + 7)
                if fd < rhs:
                    refined += 1
                    eta = complete_si_estimate(table, n_random=200, refine_rounds=5, seed=1).eta_hat
                    rhs = (th / 2) ** (2 * eta + 7)
                t.add(fd - rhs, graph=_gname(g), params=[b, gm, lam], theta=th, gap=fd, eta=eta, bound=rhs)
    t.notes.append(f"grid refinement triggered {refined} times")
    return t.done()


def si_ceiling_suite(nmax: int = 5, n_random: int = 20) -> SuiteResult:
    """Grid spectral radius under all pinnings and fields vs 144/delta (hardcore) and 4/delta (Ising)."""
    t = _Tracker("spectral independence ceilings")
    worst_ratio = 0.0
    for g in graph_sweep(nmax, nmin=2):
        D = g.max_degree
        for lam in (0.5, 1.0, 2.0):
            delta = solved_gap(0.0, 1.0, lam, D)
            if delta <= 0:
                continue
            eta = complete_si_estimate(TwoSpinSystem.hardcore(g, lam), n_random=n_random).eta_hat
            worst_ratio = max(worst_ratio, eta * delta / 144)
            t.add(144 / delta - eta, graph=_gname(g), model="hardcore", lam=lam, delta=delta, eta=eta)
        for delta in (0.3, 0.6):
            lo, hi = ising_interval(max(D, 2), delta)
            for beta in (lo, hi):
                for lam in (0.5, 1.0):
                    eta = complete_si_estimate(TwoSpinSystem.ising(g, beta, lam), n_random=n_random).eta_hat
                    worst_ratio = max(worst_ratio, eta * delta / 4)
                    t.add(4 / delta - eta, graph=_gname(g), model="ising", beta=beta, lam=lam, delta=delta, eta=eta)
    t.notes.append(
        f"largest eta/ceiling ratio {worst_ratio:.3g}; at n <= {nmax} the radius never exceeds n-1, so the ceilings are loose"
    )
    return t.done()


def ktransform_suite(nmax: int = 3, ks: Iterable[int] = (2, 3), n_random: int = 20, slack: float = 1e-9) -> SuiteResult:
    t = _Tracker("k-transformation spectral independence")
    for g in graph_sweep(nmax, connected=False):
        for b, gm, lam in PARAM_GRID:
            table = enumerate_distribution(TwoSpinSystem.uniform(g, b, gm, lam))
            eta = complete_si_estimate(table, n_random=n_random).eta_hat
            for k in ks:
                rho, _ = max_spectral_radius(k_transform_table(table, k))
                t.add(eta + 2 - rho + slack, graph=_gname(g), params=[b, gm, lam], k=k, rho=rho, eta=eta)
    return t.done()


def saw_suite(nmax: int = 6, lams: Iterable[float] = (0.5, 1.0), tol: float = 1e-9) -> SuiteResult:
    t = _Tracker("SAW influence preservation")
    for g in graph_sweep(nmax, nmin=2):
        for lam in lams:
            sy = TwoSpinSystem.hardcore(g, lam)
            for r in range(g.n):
                res = influence_preservation_residual(sy, r)
                t.add(tol - res, graph=_gname(g), lam=lam, root=r, residual=res)
    return t.done()


def potential_points(count: int = 100, seed: int = 0) -> list[tuple[float, float, float, int, float]]:
    """``(beta, gamma, lam, Delta, delta)`` with positive solved up-to-Delta gap."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        Delta = int(rng.integers(3, 7))
        if rng.random() < 0.3:
            beta, gamma = 0.0, float(rng.uniform(0.5, 2.0))
        else:
            beta = float(rng.uniform(0.05, 0.8))
            gamma = float(rng.uniform(beta, min(3.0, 0.95 / beta)))
        lam = float(np.exp(rng.uniform(-2.0, 2.0)))
        delta = solved_gap(beta, gamma, lam, Delta)
        if delta > 0.01:
            out.append((beta, gamma, lam, Delta, delta))
    return out


def potential_suite(count: int = 100, seed: int = 0, slack: float = 1e-9) -> SuiteResult:
    t = _Tracker("potential certificates")
    for beta, gamma, lam, Delta, delta in potential_points(count, seed):
        spec = PotentialSpec(beta, gamma)
        for d in range(1, Delta):
            cert = contraction_certificate(spec, lam, d, delta, seed=seed)
            top = max(cert.alpha_hat, cert.probe_max)
            t.add(cert.bound - top + slack, kind="contraction", params=[beta, gamma, lam], d=d, delta=delta, value=top)
        for d1 in range(Delta):
            for d2 in range(Delta):
                b = boundedness_certificate(spec, lam, lam, d1, d2)
                t.add(b.bound - b.value + slack, kind="boundedness", params=[beta, gamma, lam], d1=d1, d2=d2, value=b.value)
    return t.done()


def coupling_suite(nmax: int = 6, bridge_nmax: int = 6, slack: float = 1e-9) -> SuiteResult:
    t = _Tracker("path coupling certificates")
    bridges = 0
    for g in graph_sweep(nmax, nmin=2):
        n, D = g.n, g.max_degree
        cases = [("hardcore-small", TwoSpinSystem.hardcore(g, 1 / (2 * D)), WeightedHamming.unit(n), 1 / (2 * n))]
        for b, gm, lam in PARAM_GRID:
            delta = solved_gap(b, gm, lam, D)
            if delta <= 0:
                continue
            sy = magnetize_good(TwoSpinSystem.uniform(g, b, gm, lam), delta**2 / 64)
            cases.append(("magnetized", sy, WeightedHamming.degree_weights(g, delta), delta / (8 * n)))
        for kind, sy, metric, target in cases:
            cert = path_coupling_certificate(sy, metric, feasible=False)
            t.add(cert.r - target + slack, kind=kind, graph=_gname(g), params=sy.params(), r=cert.r, target=target)
            if cert.passed and n <= bridge_nmax:
                table = enumerate_distribution(sy)
                P = TransitionMatrix(table, glauber_matrix(table, "all"), DynamicsSpec.glauber("all"))
                _, one_minus = coupling_gap_bridge(cert, P)
                bridges += 1
                t.add(one_minus - cert.r + slack, kind=f"{kind}-bridge", graph=_gname(g), r=cert.r, gap=one_minus)
    t.notes.append(f"{bridges} bridge comparisons against exact Glauber spectra")
    return t.done()


def sampler_suite(steps: int = 1_000_000, hyper_draws: int = 200_000, seed: int = 2024, tol: float = 0.01) -> SuiteResult:
    t = _Tracker("sampler statistics")
    table = enumerate_distribution(TwoSpinSystem.hardcore(path_graph(2), 1.0))
    start = np.array([-1, -1])
    for spec in (DynamicsSpec.glauber(), DynamicsSpec.field(0.5)):
        tv = run_chain(spec, table, start, steps, seed).tv_to(table)
        t.add(tol - tv, chain=spec.label(), tv=tv)
        t.details[spec.label()] = tv
    params = HyperGeoParams(3, 3, 4)
    rng = np.random.default_rng(seed)
    support = hypergeo_support(params)
    pos = {a: i for i, a in enumerate(support)}
    counts = np.zeros(len(support))
    for _ in range(hyper_draws):
        counts[pos[tuple(int(x) for x in hypergeo_sample(params, rng))]] += 1
    pmf = np.array([hypergeo_pmf(params, a) for a in support])
    tv = 0.5 * float(np.abs(counts / hyper_draws - pmf).sum())
    t.add(tol - tv, chain="hypergeometric(3,3,4)", tv=tv)
    t.details["hypergeometric"] = tv
    return t.done()


def mixing_time_suite(nmax: int = 4, eps_values: Iterable[float] = (0.1, 0.01)) -> SuiteResult:
    """Exact worst-start TV reaches ``eps`` no later than the spectral bound."""
    t = _Tracker("mixing time bound")
    for g in graph_sweep(nmax, connected=False):
        for b, gm, lam in PARAM_GRID:
            table = enumerate_distribution(TwoSpinSystem.uniform(g, b, gm, lam))
            for spec in (DynamicsSpec.glauber("all"), DynamicsSpec.field(0.5)):
                P = transition_matrix(spec, table)
                rep = spectral_report(P)
                for eps in eps_values:
                    if rep.abs_gap <= 0:
                        continue
                    bound = mixing_time_bound(rep.abs_gap, table, eps)
                    hit = first_time_below(P, eps, int(math.floor(bound)))
                    slack = 0.0 if hit is not None else -1.0
                    t.add(slack, graph=_gname(g), params=[b, gm, lam], chain=spec.label(), eps=eps, bound=bound, hit=hit)
    return t.done()


SUITES: dict[str, Callable[..., SuiteResult]] = {
    "golden": golden_suite,
    "reversibility": reversibility_suite,
    "dirichlet": dirichlet_suite,
    "comparison": comparison_suite,
    "limit": limit_suite,
    "block": block_suite,
    "mixing": mixing_suite,
    "si": si_ceiling_suite,
    "ktransform": ktransform_suite,
    "saw": saw_suite,
    "potential": potential_suite,
    "coupling": coupling_suite,
    "sampler": sampler_suite,
    "mixtime": mixing_time_suite,
}

# suites whose size is governed by a graph-order bound, and the largest order each accepts
NMAX_SUITES = {
    "reversibility": 5,
    "dirichlet": 4,
    "comparison": 5,
    "block": 5,
    "mixing": 5,
    "si": 5,
    "ktransform": 3,
    "saw": 6,
    "coupling": 6,
    "mixtime": 4,
}


def run_suite(name: str, nmax: int | None = None, golden: dict[str, float] | None = None) -> SuiteResult:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}")
    fn = SUITES[name]
    if name == "golden":
        return fn(golden)
    if name in NMAX_SUITES and nmax is not None:
        return fn(nmax=min(nmax, NMAX_SUITES[name]))
    return fn()
