import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from conftest import systems
from spinlab.core import (
    Graph,
    Pinning,
    TwoSpinSystem,
    all_pinnings,
    complete_graph,
    empty_graph,
    enumerate_distribution,
    flip,
    magnetize_table,
    partial_masses,
    path_graph,
)
from spinlab.influence import (
    all_influence_matrices,
    complete_si_estimate,
    flavor_comparison,
    good_direction,
    influence_matrix,
    max_spectral_radius,
    spectral_radii,
    spectral_radius,
)
from spinlab.uniqueness import ising_interval

EDGE_HC = enumerate_distribution(TwoSpinSystem.hardcore(path_graph(2), 1.0))


def test_edge_influence_half():
    M = influence_matrix(EDGE_HC)
    np.testing.assert_allclose(M.matrix, [[0, 0.5], [0.5, 0]])
    assert spectral_radius(M) == pytest.approx(0.5)


def test_product_measure_has_no_influence():
    t = enumerate_distribution(TwoSpinSystem.uniform(empty_graph(3), 0.4, 1.0, 1.3))
    M = influence_matrix(t)
    np.testing.assert_allclose(M.matrix, 0.0, atol=1e-15)
    assert spectral_radius(M) == pytest.approx(0.0, abs=1e-15)


def test_pinned_cut_separates():
    t = enumerate_distribution(TwoSpinSystem.hardcore(path_graph(3), 1.0))
    M = influence_matrix(t, Pinning((1,), (-1,)))
    assert M.index == (0, 2)
    np.testing.assert_allclose(M.matrix, 0.0, atol=1e-15)


def test_zero_matrix_radius():
    assert spectral_radius(np.zeros((3, 3))) == 0.0


@given(systems(nmin=2, nmax=4), st.sampled_from(["absolute", "signed"]))
def test_influence_matches_brute_force(system, flavor):
    t = enumerate_distribution(system)
    mu = oracles.gibbs(system.n, system.graph.edges, system.beta, system.gamma, system.fields)
    M = influence_matrix(t, flavor=flavor).matrix
    n = system.n
    for r in range(n):
        feasible = {s[r] for s in mu}
        for u in range(n):
            if u == r or len(feasible) < 2:
                assert M[r, u] == 0.0
                continue
            ref = oracles.signed_influence(mu, r, u)
            assert M[r, u] == pytest.approx(abs(ref) if flavor == "absolute" else ref, abs=1e-12)


@given(systems(nmin=2, nmax=4))
def test_stack_matches_single_pinning_calls(system):
    t = enumerate_distribution(system)
    ids, stack = all_influence_matrices(t)
    masses = partial_masses(t)
    assert list(ids) == [i for i in range(3**system.n) if masses[i] > 0]
    for pin in all_pinnings(system.n):
        idx = pin.ternary(system.n)
        if masses[idx] <= 0:
            continue
        single = influence_matrix(t, pin)
        full = stack[int(np.searchsorted(ids, idx))]
        np.testing.assert_allclose(full[np.ix_(single.index, single.index)], single.matrix, atol=1e-14)


@given(systems(nmin=2, nmax=4))
def test_flavor_relations(system):
    t = enumerate_distribution(system)
    _, a = all_influence_matrices(t, "absolute")
    _, s = all_influence_matrices(t, "signed")
    np.testing.assert_allclose(np.abs(s), a, atol=1e-15)
    assert np.all(a >= 0) and np.all(np.abs(s) <= 1 + 1e-15)
    for m in a:
        np.testing.assert_array_equal(np.diag(m), 0.0)


@given(systems(nmin=1, nmax=4), st.data())
def test_radius_invariant_under_flip(system, data):
    n = system.n
    chi = data.draw(st.lists(st.sampled_from((-1, 1)), min_size=n, max_size=n))
    t = enumerate_distribution(system)
    r0, _ = max_spectral_radius(t)
    r1, _ = max_spectral_radius(flip(t, chi))
    assert r0 == pytest.approx(r1, abs=1e-10)


# --- good direction -----------------------------------------------------------------


def test_good_direction_hardcore_all_plus():
    s = TwoSpinSystem.hardcore(complete_graph(4), 50.0)
    np.testing.assert_array_equal(good_direction(s), 1)


@pytest.mark.parametrize("lam,expected", [(0.7, 1), (1.0, 1), (1.4, -1)])
def test_good_direction_ising(lam, expected):
    s = TwoSpinSystem.ising(path_graph(3), 0.5, lam)
    np.testing.assert_array_equal(good_direction(s), expected)


def test_good_direction_uses_own_degree():
    s = TwoSpinSystem.uniform(path_graph(3), 0.1, 0.5, 3.0)
    # endpoints: (gamma/beta)**(1/2) = 2.24 < 3; middle: (gamma/beta)**1 = 5 >= 3
    np.testing.assert_array_equal(good_direction(s), [-1, 1, -1])


# --- complete SI estimate ----------------------------------------------------------


def test_single_vertex_estimate_is_zero():
    est = complete_si_estimate(TwoSpinSystem.hardcore(Graph(1, ()), 1.0), n_random=5)
    assert est.eta_hat == 0.0


@given(systems(nmin=2, nmax=4))
def test_estimate_dominates_unit_field(system):
    t = enumerate_distribution(system)
    est = complete_si_estimate(t, n_random=3)
    assert est.eta_hat >= max_spectral_radius(t)[0] - 1e-15
    assert est.eta_hat >= 0


def test_estimate_is_reproducible_and_exports():
    s = TwoSpinSystem.hardcore(complete_graph(3), 1.0)
    a = complete_si_estimate(s, n_random=5, seed=3, keep_records=True)
    b = complete_si_estimate(s, n_random=5, seed=3, keep_records=True)
    assert a.to_dict() == b.to_dict()
    assert a.to_csv() == b.to_csv()
    assert a.to_csv().splitlines()[0] == "field_id,pinning_id,rho"
    assert a.to_dict()["label"] == "grid lower bound"


def test_refinement_never_lowers_estimate():
    s = TwoSpinSystem.uniform(path_graph(4), 0.1, 1.5, 2.0)
    base = complete_si_estimate(s, n_random=5)
    refined = complete_si_estimate(s, n_random=5, refine_rounds=3)
    assert refined.eta_hat >= base.eta_hat


def test_ising_interval_ceiling():
    lo, hi = ising_interval(3, 0.5)
    for beta in np.linspace(lo, hi, 5):
        if beta >= 1:
            continue
        est = complete_si_estimate(TwoSpinSystem.ising(complete_graph(4), beta), n_random=10)
        assert est.eta_hat <= 4 / 0.5


def test_hardcore_monotone_in_field():
    t = enumerate_distribution(TwoSpinSystem.hardcore(path_graph(4), 2.0))
    thetas = np.linspace(0.05, 1.0, 20)
    rhos = [spectral_radii(all_influence_matrices(magnetize_table(t, th))[1]).max() for th in thetas]
    assert all(a <= b + 1e-9 for a, b in zip(rhos, rhos[1:]))


def test_flavor_validation():
    with pytest.raises(ValueError):
        all_influence_matrices(EDGE_HC, "relative")


def test_flavor_comparison_agrees_on_path():
    c = flavor_comparison(enumerate_distribution(TwoSpinSystem.hardcore(path_graph(4), 1.0)))
    assert c["absolute_max"] == pytest.approx(c["signed_max"], abs=1e-12)
    assert c["flagged"] == []


def test_flavor_comparison_flags_odd_cycle():
    from spinlab.core import cycle_graph

    t = enumerate_distribution(TwoSpinSystem.hardcore(cycle_graph(5), 1.0))
    c = flavor_comparison(t)
    assert len(c["flagged"]) == 1 and c["flagged"][0]["pinning"] == {}
    row = c["flagged"][0]
    assert abs(row["absolute"] - row["signed"]) == pytest.approx(c["max_difference"])
    assert row["absolute"] == pytest.approx(spectral_radius(influence_matrix(t)))


@given(systems(nmin=2, nmax=4))
def test_flagged_pinnings_are_exactly_the_disagreements(system):
    t = enumerate_distribution(system)
    c = flavor_comparison(t)
    flagged = [row["pinning"] for row in c["flagged"]]
    for pin in all_pinnings(system.n):
        if partial_masses(t)[pin.ternary(system.n)] <= 0:
            continue
        ra = spectral_radius(influence_matrix(t, pin, "absolute"))
        rs = spectral_radius(influence_matrix(t, pin, "signed"))
        key = {str(k): v for k, v in pin.as_dict().items()}
        assert (key in flagged) == (abs(ra - rs) > 1e-9)
    assert c["absolute_max"] == pytest.approx(max_spectral_radius(t)[0], abs=1e-14)
