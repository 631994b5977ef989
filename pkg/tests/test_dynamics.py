import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from conftest import systems
from spinlab.analysis import transition_matrix
from spinlab.core import Graph, Pinning, TwoSpinSystem, conditional_table, enumerate_distribution, path_graph
from spinlab.dynamics import (
    ChainState,
    DynamicsSpec,
    HyperGeoParams,
    block_step,
    field_step,
    glauber_step,
    hypergeo_pmf,
    hypergeo_sample,
    hypergeo_support,
    k_transform_sample,
    k_transform_table,
    kernel_for,
    project_k,
    projected_block_step,
    run_chain,
)

EDGE_HC = enumerate_distribution(TwoSpinSystem.hardcore(path_graph(2), 1.0))


def state(config, seed=0):
    return ChainState(np.array(config, dtype=np.int8), np.random.default_rng(seed))


# --- hypergeometric ----------------------------------------------------------


def test_hypergeo_single_bucket():
    p = HyperGeoParams(1, 5, 3)
    assert hypergeo_support(p) == [(3,)]
    assert hypergeo_pmf(p, (3,)) == 1.0


def test_hypergeo_two_buckets_one_draw():
    p = HyperGeoParams(2, 1, 1)
    assert hypergeo_pmf(p, (1, 0)) == pytest.approx(0.5)
    assert hypergeo_pmf(p, (0, 1)) == pytest.approx(0.5)


def test_hypergeo_two_by_two():
    p = HyperGeoParams(2, 2, 2)
    assert hypergeo_pmf(p, (1, 1)) == pytest.approx(2 / 3)
    assert hypergeo_pmf(p, (2, 0)) == pytest.approx(1 / 6)
    assert hypergeo_pmf(p, (0, 2)) == pytest.approx(1 / 6)


@given(st.integers(1, 4), st.integers(1, 4), st.data())
def test_hypergeo_pmf_matches_closed_form(n, k, data):
    ell = data.draw(st.integers(0, n * k))
    p = HyperGeoParams(n, k, ell)
    ref = oracles.hypergeo(n, k, ell)
    assert set(hypergeo_support(p)) == set(ref)
    for a, q in ref.items():
        assert hypergeo_pmf(p, a) == pytest.approx(q, rel=1e-12)


def test_hypergeo_sample_sums_to_ell():
    rng = np.random.default_rng(1)
    p = HyperGeoParams(3, 3, 4)
    for _ in range(200):
        a = hypergeo_sample(p, rng)
        assert a.sum() == 4 and np.all((a >= 0) & (a <= 3))


def test_hypergeo_concentration():
    rng = np.random.default_rng(5)
    p = HyperGeoParams(4, 500, 1000)
    draws = np.array([hypergeo_sample(p, rng) for _ in range(100_000)])
    freq = np.mean(np.abs(draws / 500 - 0.5) >= 0.1)
    assert freq <= 2 * np.exp(-2 * 0.01 * 500)


def test_hypergeo_rejects_bad_params():
    with pytest.raises(ValueError):
        HyperGeoParams(2, 2, 5)
    with pytest.raises(ValueError):
        HyperGeoParams(0, 2, 0)


# --- single steps ----------------------------------------------------------------


def test_glauber_step_from_occupied_vertex():
    """From (+,-) with vertex 0 picked, vertex 0 becomes -1 with probability 1/2."""
    kern = kernel_for(EDGE_HC, DynamicsSpec.glauber())
    code = EDGE_HC.codes[EDGE_HC.index((1, -1))]
    assert kern.step(code, [0.1, 0.3]) == EDGE_HC.codes[EDGE_HC.index((-1, -1))]
    assert kern.step(code, [0.1, 0.7]) == code


def test_glauber_step_blocked_neighbour():
    kern = kernel_for(EDGE_HC, DynamicsSpec.glauber())
    code = EDGE_HC.codes[EDGE_HC.index((1, -1))]
    for u in np.linspace(0.01, 0.99, 9):
        assert kern.step(code, [0.9, u]) == code


def test_glauber_isolated_vertex_forgets_start():
    t = enumerate_distribution(TwoSpinSystem.hardcore(Graph(1, ()), 1.0))
    P = transition_matrix(DynamicsSpec.glauber(), t).P
    np.testing.assert_allclose(P, np.full((2, 2), 0.5))


def test_block_full_resample_is_exact():
    P = transition_matrix(DynamicsSpec.block(2), EDGE_HC).P
    np.testing.assert_allclose(P, np.full((3, 3), 1 / 3))


def test_field_step_example_entry():
    P = transition_matrix(DynamicsSpec.field(0.5), EDGE_HC).P
    assert P[EDGE_HC.index((-1, -1)), EDGE_HC.index((-1, -1))] == pytest.approx(0.5)


@given(systems(nmax=4), st.sampled_from(["glauber", "block", "field", "projected"]), st.integers(0, 10**6))
def test_steps_preserve_feasibility_and_pins(system, kind, seed):
    table = enumerate_distribution(system)
    n = system.n
    pin = Pinning((0,), (-1,))
    cond = conditional_table(table, pin)
    start = cond.states[-1]
    rng = np.random.default_rng(seed)
    st_ = ChainState(start.copy(), rng)
    for _ in range(20):
        if kind == "glauber":
            st_ = glauber_step(st_, cond)
        elif kind == "block":
            st_ = block_step(st_, cond, min(2, len(cond.free_vertices)) or 1) if cond.free_vertices else st_
        elif kind == "field":
            st_ = field_step(st_, cond, 0.4)
        else:
            st_ = projected_block_step(st_, table, 2, n)
        assert st_.config[0] == -1 or kind == "projected"
        target = table if kind == "projected" else cond
        assert target.prob(st_.config) > 0


def test_step_rejects_infeasible_state():
    with pytest.raises(ValueError):
        glauber_step(state((1, 1)), EDGE_HC)


def test_field_inner_glauber_mode_keeps_stationarity():
    traj = run_chain(DynamicsSpec.field(0.5, inner_steps=5), EDGE_HC, (-1, -1), 200_000, seed=3)
    assert traj.tv_to(EDGE_HC) < 0.01


# --- k-transformation ----------------------------------------------------------


def test_k_transform_single_vertex():
    t = enumerate_distribution(TwoSpinSystem.hardcore(Graph(1, ()), 1.0))
    lift = k_transform_table(t, 2)
    got = {tuple(int(x) for x in s): float(p) for s, p in zip(lift.states, lift.probs)}
    assert got == pytest.approx({(-1, -1): 0.5, (-1, 1): 0.25, (1, -1): 0.25})


def test_k_transform_identity_lift():
    t = enumerate_distribution(TwoSpinSystem.uniform(path_graph(3), 0.3, 1.2, 0.7))
    lift = k_transform_table(t, 1)
    np.testing.assert_array_equal(lift.codes, t.codes)
    np.testing.assert_allclose(lift.probs, t.probs)


@given(systems(nmax=3), st.integers(1, 3))
def test_k_transform_matches_brute_force(system, k):
    t = enumerate_distribution(system)
    mu = oracles.gibbs(system.n, system.graph.edges, system.beta, system.gamma, system.fields)
    ref = oracles.k_lift(mu, system.n, k)
    lift = k_transform_table(t, k)
    got = {tuple(int(x) for x in s): float(p) for s, p in zip(lift.states, lift.probs)}
    assert got.keys() == ref.keys()
    for y, p in ref.items():
        assert got[y] == pytest.approx(p, rel=1e-12)


@given(systems(nmax=3), st.integers(1, 3))
def test_k_transform_projects_back(system, k):
    t = enumerate_distribution(system)
    lift = k_transform_table(t, k)
    back: dict = {}
    for s, p in zip(lift.states, lift.probs):
        key = tuple(project_k(s, system.n, k))
        back[key] = back.get(key, 0.0) + p
    for s, p in zip(t.states, t.probs):
        assert back[tuple(s)] == pytest.approx(p, rel=1e-12)


def test_k_transform_sample_frequencies():
    t = enumerate_distribution(TwoSpinSystem.hardcore(Graph(1, ()), 1.0))
    rng = np.random.default_rng(0)
    draws = [tuple(k_transform_sample(t, 2, rng)) for _ in range(40_000)]
    for y, p in {(-1, -1): 0.5, (-1, 1): 0.25, (1, -1): 0.25}.items():
        assert draws.count(y) / len(draws) == pytest.approx(p, abs=0.01)


# --- run_chain -----------------------------------------------------------------


def test_zero_steps_returns_start():
    traj = run_chain(DynamicsSpec.glauber(), EDGE_HC, (1, -1), 0, seed=1)
    np.testing.assert_array_equal(traj.configs, [[1, -1]])


@pytest.mark.parametrize(
    "spec",
    [DynamicsSpec.glauber(), DynamicsSpec.block(2), DynamicsSpec.field(0.3), DynamicsSpec.projected(3, 3)],
    ids=lambda s: s.label(),
)
def test_same_seed_same_trajectory(spec):
    a = run_chain(spec, EDGE_HC, (-1, -1), 500, seed=11)
    b = run_chain(spec, EDGE_HC, (-1, -1), 500, seed=11)
    np.testing.assert_array_equal(a.codes, b.codes)
    assert a.to_csv() == b.to_csv()
    assert a.summary_json(EDGE_HC) == b.summary_json(EDGE_HC)


def test_run_chain_matches_single_steps():
    """Bulk uniform draws reproduce the single-step functions exactly."""
    spec = DynamicsSpec.field(0.4)
    traj = run_chain(spec, EDGE_HC, (-1, -1), 50, seed=9)
    st_ = state((-1, -1), seed=9)
    kern = kernel_for(EDGE_HC, spec)
    code = EDGE_HC.codes[0]
    codes = [code]
    for _ in range(50):
        code = kern.step(code, st_.rng.random(kern.draws))
        codes.append(code)
    np.testing.assert_array_equal(traj.codes, codes)


def test_thinning_records_every_thin_steps():
    traj = run_chain(DynamicsSpec.glauber(), EDGE_HC, (-1, -1), 100, seed=0, thin=10)
    np.testing.assert_array_equal(traj.steps, np.arange(0, 101, 10))


def test_glauber_frequencies_edge_hardcore():
    traj = run_chain(DynamicsSpec.glauber(), EDGE_HC, (-1, -1), 1_000_000, seed=7)
    for p in traj.frequencies().values():
        assert p == pytest.approx(1 / 3, abs=0.01)


def test_csv_format():
    traj = run_chain(DynamicsSpec.glauber(), EDGE_HC, (1, -1), 1, seed=0)
    lines = traj.to_csv().splitlines()
    assert lines[0] == "step,spins"
    assert lines[1] == "0,+1 -1"


@pytest.mark.parametrize("bad", [dict(kind="block", ell=0), dict(kind="field", theta=1.0), dict(kind="projected", k=0, ell=1)])
def test_spec_validation(bad):
    with pytest.raises(ValueError):
        DynamicsSpec(**bad)


def test_block_size_above_pool_rejected():
    with pytest.raises(ValueError):
        kernel_for(EDGE_HC, DynamicsSpec.block(3))
