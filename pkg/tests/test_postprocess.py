import numpy as np
import pytest
from scipy import stats
from collapsed_lpcm.netdata import Network
from collapsed_lpcm.core import HyperParams
from collapsed_lpcm.postprocess import (EmptySampleError, choose_reference, procrustes_align, membership_matrix,
    coclustering_matrix, relabel_samples, mean_positions, summarize)
from conftest import make_record, random_network


def test_choose_reference():
    X = np.zeros((3, 2))
    samples = [make_record(X, [0]*3, 1, loglik=ll, iteration=it) for ll, it in [(-5, 10), (-2, 20), (-2, 15), (-9, 5)]]
    assert choose_reference(samples) == 2
    assert choose_reference(samples[:2]) == 1
    with pytest.raises(EmptySampleError):
        choose_reference([])


def test_procrustes_identity(rng):
    X = rng.normal(size=(10, 2))
    np.testing.assert_allclose(procrustes_align(X, X), X, atol=1e-10)


@pytest.mark.parametrize('reflect', [False, True])
def test_procrustes_planted(rng, reflect):
    X_ref = rng.normal(size=(15, 2))
    R = stats.special_ortho_group.rvs(2, random_state=7)
    if reflect:
        R = R @ np.diag([1, -1])
    X = X_ref @ R + np.array([3.0, -8.0])
    np.testing.assert_allclose(procrustes_align(X, X_ref), X_ref, atol=1e-10)


def test_procrustes_optimal(rng):
    angles = np.linspace(0, 2*np.pi, 3600, endpoint=False)
    for trial in range(10):
        X = rng.normal(size=(8, 2))
        X_ref = rng.normal(size=(8, 2))
        err = np.sum((procrustes_align(X, X_ref) - X_ref)**2)
        assert err <= np.sum((X - X_ref)**2) + 1e-9
        A = X - X.mean(axis=0)
        B = X_ref - X_ref.mean(axis=0)
        grid = []
        for flip in [np.eye(2), np.diag([1, -1])]:
            for a in angles:
                R = np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]]) @ flip
                grid.append(np.sum((A @ R - B)**2))
        assert err <= min(grid) + 1e-9
        assert err >= min(grid) - 1e-3


def test_procrustes_degenerate(rng):
    X_ref = rng.normal(size=(5, 2))
    aligned = procrustes_align(np.ones((5, 2)), X_ref)
    np.testing.assert_allclose(aligned, np.tile(X_ref.mean(axis=0), (5, 1)))
    with pytest.raises(ValueError):
        procrustes_align(np.zeros((5, 2)), np.zeros((4, 2)))


def test_membership_and_coclustering():
    labels = np.array([[0, 0, 1], [0, 1, 1]])
    P = membership_matrix(labels, 2)
    np.testing.assert_allclose(P, [[1, 0], [0.5, 0.5], [0, 1]])
    C = coclustering_matrix(labels)
    np.testing.assert_allclose(np.diag(C), 1)
    assert C[0, 1] == 0.5 and C[0, 2] == 0 and C[1, 2] == 0.5


def test_relabel_identity(rng):
    X = rng.normal(size=(4, 2))
    samples = [make_record(X, [0, 0, 1, 1], 2) for k in range(3)]
    aligned = relabel_samples(samples, 2)
    for a in aligned:
        np.testing.assert_array_equal(a.labels, [0, 0, 1, 1])
        np.testing.assert_array_equal(a.permutation, [0, 1])


def test_relabel_transposition(rng):
    X = rng.normal(size=(4, 2))
    samples = [make_record(X, [0, 0, 1, 1], 2), make_record(X, [1, 1, 0, 0], 2)]
    aligned = relabel_samples(samples, 2)
    np.testing.assert_array_equal(aligned[0].labels, aligned[1].labels)
    np.testing.assert_array_equal(aligned[1].permutation, [1, 0])


def test_relabel_planted(rng):
    truth = np.repeat([0, 1, 2], [4, 3, 5])
    X = rng.normal(size=(12, 2))
    samples = [make_record(X, rng.permutation(3)[truth], 3, iteration=k) for k in range(50)]
    aligned = relabel_samples(samples, 3)
    for a in aligned:
        np.testing.assert_array_equal(a.labels, aligned[0].labels)
    P = membership_matrix(np.array([a.labels for a in aligned]), 3)
    assert np.all(P.max(axis=1) == 1)
    with pytest.raises(ValueError):
        relabel_samples(samples + [make_record(X, truth % 2, 2)], 3)


def test_mean_positions_rotated(rng):
    X = rng.normal(size=(6, 2))
    samples = [make_record(X, [0]*6, 1, loglik=0.0)]
    for k in range(5):
        R = stats.ortho_group.rvs(2, random_state=k)
        samples.append(make_record(X @ R + k, [0]*6, 1, loglik=-1.0))
    np.testing.assert_allclose(mean_positions(samples), X, atol=1e-9)


def test_summarize(rng):
    hp = HyperParams(g_max=4)
    net = random_network(6, rng)
    X = rng.normal(size=(6, 2))
    samples = [make_record(X, [0, 0, 0, 1, 1, 1], 2, iteration=1, beta=1.0),
        make_record(X + 1, [1, 1, 1, 0, 0, 0], 2, iteration=2, beta=2.0),
        make_record(X, [0]*6, 1, iteration=3, beta=3.0)]
    summary = summarize(samples, net, hp)
    np.testing.assert_allclose(summary.p_G, [1/3, 2/3, 0, 0])
    assert summary.modal_G == 2
    assert summary.membership.shape == (6, 2)
    np.testing.assert_allclose(summary.membership.sum(axis=1), 1)
    assert np.all(summary.membership.max(axis=1) == 1)
    assert summary.beta_mean == pytest.approx(2.0)
    assert summary.n_samples == 3
    assert summary.coclustering[0, 3] == pytest.approx(1/3)
    np.testing.assert_allclose(summary.link_probs, summary.link_probs.T)
    d = summary.to_dict()
    assert d['modal_G'] == 2 and len(d['p_G']) == 4
    with pytest.raises(EmptySampleError):
        summarize([], net, hp)
    with pytest.raises(ValueError):
        summarize(samples, Network(np.zeros((3, 3))), hp)
