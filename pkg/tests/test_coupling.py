import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from sweeps import CONNECTED_LE5
from spinlab.analysis import TransitionMatrix, transition_matrix
from spinlab.core import Graph, Pinning, TwoSpinSystem, empty_graph, enumerate_distribution, path_graph, star_graph
from spinlab.coupling import (
    WeightedHamming,
    claim_isfd_factor,
    coupling_gap_bridge,
    dobrushin_entry,
    dobrushin_row,
    magnetize_good,
    path_coupling_certificate,
    plus_probability,
)
from spinlab.dynamics import DynamicsSpec
from spinlab.influence import good_direction
from spinlab.uniqueness import ising_interval, solved_gap


def glauber_all(system):
    return transition_matrix(DynamicsSpec.glauber("all"), enumerate_distribution(system))


def test_edge_dobrushin_half():
    system = TwoSpinSystem.hardcore(path_graph(2), 1.0)
    assert dobrushin_row(system, 0) == {1: pytest.approx(0.5)}


def test_no_interaction_gives_zero():
    system = TwoSpinSystem.ising(path_graph(3), 1.0, 1.3)
    for v in range(3):
        assert all(r == pytest.approx(0.0, abs=1e-15) for r in dobrushin_row(system, v).values())


def test_frozen_vertex_limit():
    vals = [dobrushin_entry(TwoSpinSystem.hardcore(path_graph(2), lam), 1) for lam in (1e-2, 1e-4, 1e-8)]
    assert vals[0] > vals[1] > vals[2] and vals[2] < 1e-7


def test_plus_probability_convention():
    system = TwoSpinSystem.hardcore(star_graph(2), 1.0)
    # centre with both neighbours -1: s=2, beta**0 = 1
    assert plus_probability(system, 0, 2) == pytest.approx(0.5)
    assert plus_probability(system, 0, 1) == 0.0


def test_single_vertex_rate_one():
    cert = path_coupling_certificate(TwoSpinSystem.hardcore(Graph(1, ()), 3.0))
    assert cert.r == 1.0 and cert.passed


def test_isolated_vertices_rate():
    for n in (1, 3, 5):
        cert = path_coupling_certificate(TwoSpinSystem.hardcore(empty_graph(n), 2.0))
        assert cert.r == pytest.approx(1 / n)


@pytest.mark.parametrize("graph", [g for g in CONNECTED_LE5 if g.n >= 2], ids=str)
def test_small_activity_rate(graph):
    lam = 1 / (2 * graph.max_degree)
    system = TwoSpinSystem.hardcore(graph, lam)
    cert = path_coupling_certificate(system)
    assert cert.r >= 1 / (2 * graph.n) - 1e-12
    ok, one_minus = coupling_gap_bridge(cert, glauber_all(system))
    assert ok and one_minus >= cert.r - 1e-9


def test_edge_bridge_small_activity():
    system = TwoSpinSystem.hardcore(path_graph(2), 0.1)
    cert = path_coupling_certificate(system)
    ok, one_minus = coupling_gap_bridge(cert, glauber_all(system))
    assert ok
    assert cert.r == pytest.approx(1 - (1 - 0.5 + 0.1 / 1.1 / 2))
    mu = oracles.gibbs(2, ((0, 1),), 0.0, 1.0, [0.1, 0.1])
    ev = np.sort(np.linalg.eigvals(oracles.glauber(mu, 2)).real)[::-1]
    assert one_minus == pytest.approx(1 - ev[1], abs=1e-12)


def test_bridge_refuses_failed_certificate():
    system = TwoSpinSystem.hardcore(star_graph(4), 5.0)
    cert = path_coupling_certificate(system)
    assert not cert.passed
    with pytest.raises(ValueError):
        coupling_gap_bridge(cert, glauber_all(system))


def test_bridge_refuses_irreversible_matrix():
    system = TwoSpinSystem.hardcore(path_graph(2), 0.1)
    P = glauber_all(system)
    Q = P.P.copy()
    Q[0, 1], Q[0, 2] = Q[0, 1] + 0.1, Q[0, 2] - 0.1
    with pytest.raises(ValueError):
        coupling_gap_bridge(path_coupling_certificate(system), TransitionMatrix(P.table, Q, P.spec))


def unique_params():
    return st.sampled_from(
        [(0.0, 1.0, 1.0), (0.0, 1.0, 2.0), (0.2, 1.5, 0.7), (0.5, 1.2, 2.0), (0.3, 0.3, 1.0), (0.6, 0.6, 1.5)]
    )


@given(unique_params(), st.sampled_from([g for g in CONNECTED_LE5 if g.n >= 2]))
def test_magnetized_rate_with_weights(params, graph):
    beta, gamma, lam = params
    Delta = max(graph.max_degree, 3)
    delta = solved_gap(beta, gamma, lam, Delta)
    if delta <= 0:
        return
    system = magnetize_good(TwoSpinSystem.uniform(graph, beta, gamma, lam), delta**2 / 64)
    cert = path_coupling_certificate(system, WeightedHamming.degree_weights(graph, delta))
    assert cert.r >= delta / (8 * graph.n) - 1e-9
    ok, _ = coupling_gap_bridge(cert, glauber_all(system))
    assert ok


@given(st.integers(2, 5).flatmap(lambda n: st.tuples(st.just(n), st.permutations(range(n)))), st.floats(0.05, 1.0))
def test_certificate_permutation_equivariant(n_perm, lam):
    n, perm = n_perm
    g = path_graph(n)
    a = path_coupling_certificate(TwoSpinSystem.uniform(g, 0.2, 1.4, lam), WeightedHamming.degree_weights(g, 0.3))
    h = g.relabel(perm)
    b = path_coupling_certificate(TwoSpinSystem.uniform(h, 0.2, 1.4, lam), WeightedHamming.degree_weights(h, 0.3))
    assert a.r == pytest.approx(b.r, rel=1e-12)
    assert a.r_feasible == pytest.approx(b.r_feasible, rel=1e-12)


def test_feasible_rate_not_below_cube_rate():
    for lam in (0.1, 0.5, 1.0):
        cert = path_coupling_certificate(TwoSpinSystem.hardcore(star_graph(3), lam))
        assert cert.r_feasible >= cert.r - 1e-12


def test_weights_metric():
    w = WeightedHamming.degree_weights(star_graph(3), 0.4)
    assert w.weights == (3.0, 1 - 0.4 / 8, 1 - 0.4 / 8, 1 - 0.4 / 8)
    x = np.array([1, -1, -1, 1])
    y = np.array([-1, -1, 1, 1])
    assert w(x, y) == pytest.approx(3.0 + 0.95)
    assert w(x, x) == 0.0
    assert w(x, y) == w(y, x)
    assert WeightedHamming.degree_weights(empty_graph(2), 0.4).weights == (1.0, 1.0)


def test_claim_factor_hardcore():
    delta = solved_gap(0.0, 1.0, 2.0, 3)
    base = TwoSpinSystem.hardcore(star_graph(3), 2.0)
    system = magnetize_good(base, delta**2 / 64)
    assert claim_isfd_factor(system, 0, 0) < 1 - delta / 4
    assert claim_isfd_factor(system, 0, 1) == 0.0
    # without the magnetizing step the factor sits far above one
    assert claim_isfd_factor(base, 0, 0) == pytest.approx(2.0)


@given(unique_params(), st.sampled_from([g for g in CONNECTED_LE5 if g.max_degree >= 2]))
def test_claim_factor_after_magnetizing(params, graph):
    beta, gamma, lam = params
    delta = solved_gap(beta, gamma, lam, max(graph.max_degree, 3))
    if delta <= 0:
        return
    system = magnetize_good(TwoSpinSystem.uniform(graph, beta, gamma, lam), delta**2 / 64)
    for u, deg in enumerate(graph.degrees):
        if deg < 2:
            continue
        for s in range(deg):
            assert claim_isfd_factor(system, u, s) < 1 - delta / 4


def test_claim_factor_ising_boundary():
    lo, _ = ising_interval(3, 0.5)
    system = TwoSpinSystem.ising(star_graph(3), lo, 1.0)
    for s in range(3):
        assert claim_isfd_factor(system, 0, s) < 1 - 1 / 8


def test_claim_factor_validation():
    system = TwoSpinSystem.hardcore(star_graph(3), 2.0)
    with pytest.raises(ValueError):
        claim_isfd_factor(system, 1, 0)
    with pytest.raises(ValueError):
        claim_isfd_factor(system, 0, 3)


def test_magnetize_good_direction():
    system = TwoSpinSystem.ising(path_graph(3), 0.5, 2.0)
    assert np.all(good_direction(system) == -1)
    m = magnetize_good(system, 0.5)
    assert m.fields == (4.0, 4.0, 4.0)
    with pytest.raises(ValueError):
        magnetize_good(system, 1.0)


def test_pinned_certificate_skips_pinned_vertices():
    system = TwoSpinSystem.hardcore(path_graph(3), 0.3)
    cert = path_coupling_certificate(system, pin=Pinning((1,), (-1,)))
    assert [row["vertex"] for row in cert.table] == [0, 2]
    assert cert.r == pytest.approx(1 / 3)


def test_certificate_serializes():
    d = path_coupling_certificate(TwoSpinSystem.hardcore(path_graph(2), 0.5)).to_dict()
    assert set(d) == {"r", "worst_vertex", "r_feasible", "pass", "weights", "table"}
    assert math.isfinite(d["r"])
