import warnings
import numpy as np
import pytest
from scipy import stats
from sklearn.mixture import GaussianMixture
from collapsed_lpcm.netdata import Network
from collapsed_lpcm.core import HyperParams, LatentConfig, log_likelihood
from collapsed_lpcm.sampler import initial_positions
from collapsed_lpcm.postprocess import mean_positions
from collapsed_lpcm.bic import (DegenerateBICError, n_mix_params, mixture_loglik, bic_mix, bic_lr, fit_beta,
    effective_size, fit_lr, bic_report)
from collapsed_lpcm.data import load_karate
from conftest import random_network, make_record


def test_n_mix_params():
    assert n_mix_params(3, 2) == 11
    assert n_mix_params(1, 2) == 3


def test_single_component_closed_form(rng):
    X = rng.normal(size=(40, 2))*[1, 3]
    gm = GaussianMixture(n_components=1, covariance_type='spherical', reg_covar=0).fit(X)
    assert mixture_loglik(X, 1) == pytest.approx(gm.score(X)*40, rel=1e-6)


def test_bic_mix_separated_clouds(rng):
    X = np.vstack([rng.normal(size=(20, 2)) + 10, rng.normal(size=(20, 2)) - 10])
    assert bic_mix(X, 2) < bic_mix(X, 1)
    assert bic_mix(X, 2, seed=3) == pytest.approx(bic_mix(X, 2, seed=3))
    with pytest.raises(ValueError):
        bic_mix(X, 0)
    with pytest.raises(ValueError):
        mixture_loglik(X[:2], 3)


def test_bic_lr_rotation_invariant(rng):
    net = random_network(15, rng)
    X = rng.normal(size=(15, 2))
    R = stats.ortho_group.rvs(2, random_state=2)
    assert bic_lr(net, X @ R + 4) == pytest.approx(bic_lr(net, X), rel=1e-9)
    assert bic_lr(net, X, n_lr='dyads') - bic_lr(net, X) == pytest.approx(np.log(105) - np.log(net.n_ties))
    with pytest.raises(ValueError):
        effective_size(net, 'edges')


def test_bic_lr_separable():
    net = Network(np.ones((4, 4)) - np.eye(4))
    with pytest.warns(UserWarning, match='separable'):
        value = bic_lr(net, np.zeros((4, 2)))
    assert np.isfinite(value)
    assert fit_beta(net, np.zeros((4, 2))) == (50.0, True)


def test_bic_lr_empty_network():
    net = Network(np.zeros((5, 5)))
    with pytest.raises(DegenerateBICError):
        bic_lr(net, np.zeros((5, 2)))
    beta, separable = fit_beta(net, np.random.default_rng(0).normal(size=(5, 2)))
    assert separable and beta == -50.0


def test_fit_beta_karate():
    net = load_karate()
    X = initial_positions(net)
    beta_hat, separable = fit_beta(net, X)
    assert not separable
    grid = np.linspace(beta_hat - 1, beta_hat + 1, 201)
    best = max(log_likelihood(net, LatentConfig(X, b)) for b in grid)
    assert log_likelihood(net, LatentConfig(X, beta_hat)) >= best - 1e-9


def test_bic_report(rng):
    hp = HyperParams(g_max=4)
    net = random_network(8, rng, p=0.4)
    X = rng.normal(size=(8, 2))
    samples = [make_record(X, [0]*8, 1, loglik=-1.0, iteration=1), make_record(X*1.1, [0]*8, 1, iteration=2)]
    report = bic_report(net, samples, hp, G_max=1)
    X_hat = mean_positions(samples)
    assert report.total[0] == pytest.approx(bic_lr(net, X_hat) + bic_mix(X_hat, 1))
    assert report.chosen_G == 1
    assert report.n_lr == net.n_ties and report.n == 8
    text = report.to_text()
    assert '*' in text and 'beta_hat' in text
    assert list(report.to_frame().columns) == ['G', 'bic_lr', 'bic_mix', 'total']


def test_bic_report_more_groups_than_actors(rng):
    net = Network(np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]]))
    X = rng.normal(size=(3, 2))
    with warnings.catch_warnings():
        warnings.simplefilter('ignore')
        report = bic_report(net, [make_record(X, [0]*3, 1)], HyperParams(g_max=5))
    assert len(report.G) == 5
    assert np.all(np.isinf(report.total[3:]))
    assert np.all(np.isfinite(report.total[:3]))


def test_bic_report_warns_once_when_separable(rng):
    net = Network(np.ones((4, 4)) - np.eye(4))
    X = rng.normal(size=(4, 2))
    with pytest.warns(UserWarning) as record:
        report = bic_report(net, [make_record(X, [0]*4, 1)], HyperParams(g_max=1))
    assert sum('separable' in str(w.message) for w in record) == 1
    assert report.separable and report.beta_hat == 50.0
    with pytest.warns(UserWarning, match='separable'):
        lr, beta_hat, separable = fit_lr(net, X)
    assert separable and report.bic_lr == pytest.approx(lr)
