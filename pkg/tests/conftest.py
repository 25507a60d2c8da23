import numpy as np
import pytest
from collapsed_lpcm.netdata import Network
from collapsed_lpcm.core import HyperParams, LatentConfig, Allocation, FlatLikelihood
from collapsed_lpcm.sampler import ChainState, SampleRecord


@pytest.fixture
def rng():
    return np.random.default_rng(20240713)


@pytest.fixture
def hp():
    return HyperParams()


def random_network(n, rng, p=0.3, directed=False):
    A = (rng.random((n, n)) < p).astype(np.int8)
    np.fill_diagonal(A, 0)
    if not directed:
        A = np.tril(A, k=-1)
        A = A + A.T
    return Network(A, directed=directed)


def flat_state(X, labels, G, gamma=0.5, beta=0.0):
    '''Chain state with a flat likelihood (prior only).'''
    X = np.asarray(X, dtype=float)
    return ChainState.from_config(LatentConfig(X, beta), Allocation(labels, G), gamma, FlatLikelihood(len(X)))


def make_record(X, labels, G, loglik=0.0, iteration=0, beta=0.0, gamma=0.1):
    return SampleRecord(iteration, G, beta, gamma, loglik, np.asarray(labels), np.asarray(X, dtype=float))
