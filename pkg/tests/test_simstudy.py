import numpy as np
import pandas as pd
import pytest
from numpy.polynomial.hermite import hermgauss
from scipy.special import expit
from collapsed_lpcm.core import HyperParams
from collapsed_lpcm.sampler import SamplerConfig
from collapsed_lpcm.simstudy import (MU_GRID, TAU_GRID, SCENARIOS, Scenario, CalibrationTable, estimate_link_prob,
    build_lookup, pick_params, scenario_for, simulate_network, write_truth, write_lookup, read_lookup, run_study)


@pytest.fixture(scope='module')
def lookup():
    return build_lookup(N=5000, seed=0)


def test_link_prob_zero_separation():
    within = estimate_link_prob(0.0, 2.0, 1, 2000, np.random.default_rng(1))
    between = estimate_link_prob(0.0, 2.0, -1, 2000, np.random.default_rng(1))
    assert within == between
    assert estimate_link_prob(0.0, 1e12, 1, 1000, np.random.default_rng(2)) == pytest.approx(0.5, abs=1e-5)
    with pytest.raises(ValueError):
        estimate_link_prob(1.0, 1.0, 0, 2000, np.random.default_rng(1))
    with pytest.raises(ValueError):
        estimate_link_prob(1.0, 1.0, 1, 999, np.random.default_rng(1))


def test_link_prob_quadrature():
    # Opposite clusters at mu=1, tau=4: x - x' ~ N((2,2), 0.5 I)
    t, w = hermgauss(60)
    T1, T2 = np.meshgrid(t, t, indexing='ij')
    V1, V2 = 2 + T1, 2 + T2
    expected = np.sum(np.outer(w, w) * expit(-np.sqrt(V1**2 + V2**2))) / np.pi
    estimate = estimate_link_prob(1.0, 4.0, -1, 200000, np.random.default_rng(3))
    assert estimate == pytest.approx(expected, rel=2e-2)


def test_lookup_table(lookup):
    assert lookup.r_hat.shape == (len(MU_GRID), len(TAU_GRID)) == (20, 20)
    assert lookup.r_hat[0, 0] < 1.2
    assert np.all(lookup.r_hat >= 0.99)
    assert np.all(lookup.r_hat[1:] >= lookup.r_hat[:-1]*0.98)
    assert np.all(lookup.r_hat[:,1:] >= lookup.r_hat[:,:-1]*0.98)
    assert lookup.r_hat.max() > max(SCENARIOS)
    again = build_lookup(N=5000, seed=0)
    np.testing.assert_array_equal(again.r_hat, lookup.r_hat)
    with pytest.raises(ValueError):
        build_lookup(N=100)


def test_pick_params():
    table = CalibrationTable(np.array([0.1, 0.2]), np.array([1.0, 2.0]), np.array([[1.0, 2.0], [3.0, 2.0]]), 1000, 0)
    assert pick_params(table, 3.0) == (0.2, 1.0)
    assert pick_params(table, 2.0) == (0.1, 2.0)
    with pytest.warns(UserWarning, match='outside'):
        assert pick_params(table, 10.0) == (0.2, 1.0)


def test_pick_params_from_lookup(lookup):
    scenario = scenario_for(lookup, 1.5)
    a, b = np.flatnonzero(MU_GRID == scenario.mu)[0], np.flatnonzero(TAU_GRID == scenario.tau)[0]
    assert 1.4 <= lookup.r_hat[a, b] <= 1.6
    assert scenario.n_actors == 50


def test_scenario_validation():
    with pytest.raises(ValueError):
        Scenario(0.5, 1.0, 1.0)
    with pytest.raises(ValueError):
        Scenario(2.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        Scenario(2.0, 1.0, 1.0, weights=(0.5, 0.6))
    np.testing.assert_array_equal(Scenario(2.0, 0.5, 1.0).centers, [[0.5, 0.5], [-0.5, -0.5]])


def test_simulate_network_deterministic():
    scenario = Scenario(5.0, 1.0, 4.0, n_actors=30)
    net1, labels1, X1 = simulate_network(scenario, 0.0, np.random.default_rng(9))
    net2, labels2, X2 = simulate_network(scenario, 0.0, np.random.default_rng(9))
    assert net1 == net2
    np.testing.assert_array_equal(labels1, labels2)
    np.testing.assert_array_equal(X1, X2)
    assert not net1.directed and net1.n == 30


def test_simulate_network_point_masses():
    scenario = Scenario(5.0, 1.0, 1e12, n_actors=200)
    net, labels, X = simulate_network(scenario, 0.0, np.random.default_rng(4))
    I, J = np.tril_indices(200, -1)
    same = labels[I] == labels[J]
    ties = net.adjacency[I, J]
    assert ties[same].mean() == pytest.approx(0.5, abs=0.03)
    assert ties[~same].mean() == pytest.approx(1/(1 + np.exp(2*np.sqrt(2))), abs=0.015)


def test_lookup_round_trip(tmp_path, lookup):
    fname = tmp_path / 'lookup.csv'
    write_lookup(lookup, fname, header={'N': 5000})
    table = read_lookup(fname)
    np.testing.assert_allclose(table.r_hat, lookup.r_hat, rtol=1e-9)
    np.testing.assert_allclose(table.mu, MU_GRID, rtol=1e-9)
    assert table.N == 5000 and table.seed == 0
    assert len(pd.read_csv(fname, comment='#')) == 400


def test_write_truth(tmp_path):
    fname = tmp_path / 'net.truth.csv'
    write_truth(fname, np.array([0, 1, 1]), np.arange(6.0).reshape(3, 2), header={'seed': 1})
    df = pd.read_csv(fname, comment='#')
    assert list(df.columns) == ['actor', 'true_label', 'x1', 'x2']
    assert df['true_label'].tolist() == [1, 2, 2]
    assert open(fname).readline() == '# seed: 1\n'


def test_run_study_small():
    scenario = Scenario(5.0, 1.0, 4.0, n_actors=10)
    hp = HyperParams(g_max=4)
    df = run_study(scenario, networks=2, hp=hp, sc=SamplerConfig(burnin=10, iters=20, thin=2), seed=1)
    assert len(df) == 2
    assert [f"p_G{g}" for g in range(1, 5)] == [c for c in df.columns if c.startswith('p_G')]
    np.testing.assert_allclose(df[[f"p_G{g}" for g in range(1, 5)]].sum(axis=1), 1)
    again = run_study(scenario, networks=2, hp=hp, sc=SamplerConfig(burnin=10, iters=20, thin=2), seed=1)
    pd.testing.assert_frame_equal(df, again)


@pytest.mark.slow
def test_preset_scenarios():
    table = build_lookup(N=10000, seed=0)
    for r in SCENARIOS:
        scenario = scenario_for(table, r)
        within = estimate_link_prob(scenario.mu, scenario.tau, 1, 200000, np.random.default_rng(5))
        between = estimate_link_prob(scenario.mu, scenario.tau, -1, 200000, np.random.default_rng(6))
        a, b = np.flatnonzero(MU_GRID == scenario.mu)[0], np.flatnonzero(TAU_GRID == scenario.tau)[0]
        assert within/between == pytest.approx(table.r_hat[a, b], rel=0.08)
