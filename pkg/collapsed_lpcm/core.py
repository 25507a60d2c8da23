#!/usr/bin/env python
# -*- coding: utf-8 -*-
# Closed-form densities of the collapsed latent position cluster model:
# the logistic dyad likelihood, the Dirichlet-multinomial allocation prior,
# the per-group marginal likelihood (mean and precision integrated out) and
# the collapsed log posterior composed from them.
# All densities are computed in log space.
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
import numpy as np
from scipy import stats
from scipy.special import gammaln, expit
from scipy.spatial.distance import pdist, squareform
from .netdata import dyad_indices


@dataclass(frozen=True)
class HyperParams(object):
    '''
    Model hyperparameters.

    Parameters
    ----------
    alpha : float
        Symmetric Dirichlet concentration of the mixture weights.
    delta : float
        Shape control of the Gamma(delta/2, gamma/2) prior on group precisions.
    kappa : float
        Group means have prior N(0, 1/(kappa*tau) I).
    gamma_s, gamma_r : float
        gamma ~ Gamma(s/2, r/2) (shape, rate). The defaults give prior mean
        0.103 and standard deviation 0.103/4.
    beta_prior_var : float
        beta ~ N(0, beta_prior_var).
    g_rate : float
        Poisson rate of the prior on G, truncated to 1..g_max.
    g_max : int
    d : int
        Latent dimension.
    '''
    alpha: float = 3.0
    delta: float = 2.0
    kappa: float = 0.1
    gamma_s: float = 32.0
    gamma_r: float = 32.0/0.103
    beta_prior_var: float = 2.0
    g_rate: float = 1.0
    g_max: int = 10
    d: int = 2

    def __post_init__(self):
        for name in ['alpha', 'delta', 'kappa', 'gamma_s', 'gamma_r', 'beta_prior_var', 'g_rate']:
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"HyperParams.{name} must be strictly positive, got {value}")
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"Latent dimension d must be a positive integer, got {self.d}")
        if int(self.g_max) != self.g_max or self.g_max < 1:
            raise ValueError(f"g_max must be a positive integer, got {self.g_max}")

    @property
    def gamma_prior_mean(self):
        return self.gamma_s / self.gamma_r


@dataclass(frozen=True)
class LatentConfig(object):
    '''
    Latent positions X (n*d) and abundance beta.
    '''
    X: np.ndarray
    beta: float

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=np.float64))
        if not np.all(np.isfinite(X)) or not np.isfinite(self.beta):
            raise ValueError("Latent positions and beta must be finite")
        object.__setattr__(self, 'X', X)
        object.__setattr__(self, 'beta', float(self.beta))


class Allocation(object):
    def __init__(self, labels, G):
        '''
        Component labels (0-based, 0..G-1) with G components. Empty
        components are legal.
        '''
        labels = np.asarray(labels, dtype=np.intp)
        if labels.ndim != 1:
            raise ValueError(f"Labels must be a vector, got shape {labels.shape}")
        if G < 1 or (labels.size and (labels.min() < 0 or labels.max() >= G)):
            raise ValueError(f"Labels must lie in 0..{G-1}")
        self.labels = labels
        self.G = int(G)

    @property
    def n(self):
        return self.labels.size

    @property
    def counts(self):
        return np.bincount(self.labels, minlength=self.G)


class GroupStats(object):
    def __init__(self, counts, sums, sumsq):
        '''
        Per-group sufficient statistics of the latent positions: n_g, the sum
        vector of x_i and the sum of squared norms ||x_i||^2.

        Use `GroupStats.from_positions` to compute them from scratch.
        '''
        self.counts = np.array(counts, dtype=np.intp)
        self.sums = np.array(sums, dtype=np.float64).reshape(len(self.counts), -1)
        self.sumsq = np.array(sumsq, dtype=np.float64)

    @classmethod
    def from_positions(cls, X, labels, G):
        X = np.asarray(X, dtype=np.float64)
        d = X.shape[1]
        counts = np.bincount(labels, minlength=G)
        sums = np.zeros((G, d))
        np.add.at(sums, labels, X)
        sumsq = np.bincount(labels, weights=np.einsum('ij,ij->i', X, X), minlength=G)
        return cls(counts, sums, sumsq)

    @property
    def G(self):
        return len(self.counts)

    def copy(self):
        return GroupStats(self.counts, self.sums, self.sumsq)

    def add(self, g, x):
        self.counts[g] += 1
        self.sums[g] += x
        self.sumsq[g] += x @ x

    def remove(self, g, x):
        self.counts[g] -= 1
        self.sums[g] -= x
        self.sumsq[g] -= x @ x

    def move(self, g, x_old, x_new):
        '''Member of group g moved from x_old to x_new.'''
        self.sums[g] += x_new - x_old
        self.sumsq[g] += x_new @ x_new - x_old @ x_old

    def set_group(self, g, counts, sums, sumsq):
        self.counts[g] = counts
        self.sums[g] = sums
        self.sumsq[g] = sumsq

    def insert_group(self, k):
        '''Insert an empty group at index k (groups >= k shift up).'''
        self.counts = np.insert(self.counts, k, 0)
        self.sums = np.insert(self.sums, k, 0.0, axis=0)
        self.sumsq = np.insert(self.sumsq, k, 0.0)

    def drop_group(self, k):
        self.counts = np.delete(self.counts, k)
        self.sums = np.delete(self.sums, k, axis=0)
        self.sumsq = np.delete(self.sumsq, k)

    def matches(self, X, labels, rtol=1e-10, atol=1e-10):
        '''
        Whether the incrementally maintained values agree with a from-scratch
        recomputation.
        '''
        fresh = GroupStats.from_positions(X, labels, self.G)
        return (np.allclose(self.counts, fresh.counts, rtol=rtol, atol=atol)
            and np.allclose(self.sums, fresh.sums, rtol=rtol, atol=atol)
            and np.allclose(self.sumsq, fresh.sumsq, rtol=rtol, atol=atol))

    def scatter(self, hp, gamma):
        '''
        S_g = sum ||x_i||^2 - ||sum x_i||^2 / (n_g + kappa) + gamma, per group.
        '''
        return group_scatter(self.counts, self.sums, self.sumsq, hp.kappa, gamma)

    def log_marginals(self, hp, gamma):
        '''Vector of log lambda_g over all groups.'''
        return log_marginal(self.counts, self.sums, self.sumsq, hp, gamma)


# ========== Dyad likelihood ==========
def linear_predictor(x_i, x_j, beta):
    '''
    eta_ij = beta - ||x_i - x_j||.
    '''
    return beta - np.linalg.norm(np.asarray(x_i, dtype=np.float64) - np.asarray(x_j, dtype=np.float64))


def log1p_exp(eta):
    '''
    log(1 + exp(eta)), stable for large |eta|.
    '''
    return np.logaddexp(0.0, eta)


def dyad_log_prob(y, eta):
    '''
    log Pr(Y_ij = y | eta) for the logistic link.
    '''
    return y*eta - log1p_exp(eta)


def _check_shape(net, X):
    if X.shape[0] != net.n:
        raise ValueError(f"Positions have {X.shape[0]} rows but the network has {net.n} actors")


def _blocked_sum(terms, partitions=1, workers=None):
    '''
    Sum in P contiguous blocks, partial sums reduced in fixed block order, so
    the result only depends on the partition plan and not on the scheduling.
    '''
    if partitions <= 1:
        return float(np.sum(terms))
    blocks = np.array_split(terms, partitions)
    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(np.sum, blocks))
    else:
        partials = [np.sum(block) for block in blocks]
    return float(np.sum(np.array(partials)))


def log_likelihood(net, cfg, partitions=1, workers=None):
    '''
    log p(Y | X, beta) = sum over dyads of y_ij eta_ij - log(1 + exp(eta_ij)).

    Parameters
    ----------
    net : Network
    cfg : LatentConfig
    partitions : int
        Number of contiguous dyad blocks summed separately.
    workers : int
        Sum the blocks on a thread pool of this size.
    '''
    _check_shape(net, cfg.X)
    I, J = dyad_indices(net)
    D = squareform(pdist(cfg.X))
    eta = cfg.beta - D[I, J]
    terms = dyad_log_prob(net.adjacency[I, J], eta)
    return _blocked_sum(terms, partitions, workers)


def log_likelihood_actor(net, cfg, i):
    '''
    Sum of dyad log-probabilities over all dyads involving actor i (0-based),
    both directions when directed.
    '''
    _check_shape(net, cfg.X)
    if not (0 <= i < net.n):
        raise IndexError(f"Actor index {i} out of range 0..{net.n-1}")
    dist = np.linalg.norm(cfg.X - cfg.X[i], axis=1)
    return DyadLikelihood(net).actor(dist, cfg.beta, i)


def link_probabilities(cfg):
    '''
    Matrix of link probabilities expit(beta - d_ij), zero diagonal.
    '''
    P = expit(cfg.beta - squareform(pdist(cfg.X)))
    np.fill_diagonal(P, 0.0)
    return P


class DyadLikelihood(object):
    flat = False

    def __init__(self, net):
        '''
        Likelihood evaluations from a cached distance matrix, as used inside
        the sampler. For a directed network both y_ij and y_ji share the
        same linear predictor, so dyads are folded onto the lower triangle.
        '''
        self.net = net
        self.n = net.n
        Y = net.adjacency.astype(np.float64)
        self._mult = 2.0 if net.directed else 1.0
        self._Ysym = Y + Y.T if net.directed else Y
        self._I, self._J = np.tril_indices(self.n, k=-1)
        self._ylow = self._Ysym[self._I, self._J]

    def total(self, D, beta):
        eta = beta - D[self._I, self._J]
        return float(np.sum(self._ylow*eta - self._mult*log1p_exp(eta)))

    def term_matrix(self, D, beta):
        '''Symmetric matrix of dyad terms, zero diagonal; row i sums to the actor's share.'''
        eta = beta - D
        T = self._Ysym*eta - self._mult*log1p_exp(eta)
        np.fill_diagonal(T, 0.0)
        return T

    def actor_terms(self, dist, beta, i):
        '''
        Parameters
        ----------
        dist : array of shape (n,)
            Distances from actor i to every actor (entry i is ignored).
        '''
        eta = beta - dist
        terms = self._Ysym[i]*eta - self._mult*np.logaddexp(0.0, eta)
        terms[i] = 0.0
        return terms

    def actor(self, dist, beta, i):
        return float(np.sum(self.actor_terms(dist, beta, i)))


class FlatLikelihood(object):
    flat = True

    def __init__(self, n):
        '''
        Likelihood-off mode: log p(Y | X, beta) is treated as 0, so the
        sampler targets the prior. Only for test harnesses.
        '''
        self.n = n

    def total(self, D, beta):
        return 0.0

    def term_matrix(self, D, beta):
        return np.zeros((self.n, self.n))

    def actor_terms(self, dist, beta, i):
        return np.zeros(self.n)

    def actor(self, dist, beta, i):
        return 0.0


# ========== Priors ==========
def log_alloc_prior_counts(counts, alpha):
    '''
    log pi(c | G) from the group counts (Dirichlet integrated out).
    '''
    counts = np.asarray(counts, dtype=np.float64)
    G = len(counts)
    n = counts.sum()
    return float(gammaln(G*alpha) - G*gammaln(alpha) + np.sum(gammaln(counts + alpha)) - gammaln(n + G*alpha))


def log_alloc_prior(alloc, hp):
    '''
    log[ Gamma(G alpha)/Gamma(alpha)^G * prod_g Gamma(n_g + alpha) / Gamma(n + G alpha) ].
    '''
    return log_alloc_prior_counts(alloc.counts, hp.alpha)


@lru_cache(maxsize=None)
def _log_g_prior_table(g_rate, g_max):
    G = np.arange(1, g_max+1)
    logp = stats.poisson.logpmf(G, g_rate)
    return logp - np.logaddexp.reduce(logp)


def log_g_prior(G, hp):
    '''
    Poisson(g_rate) log prior on G, truncated to 1..g_max and renormalized.
    '''
    if not (1 <= G <= hp.g_max):
        return -np.inf
    return float(_log_g_prior_table(float(hp.g_rate), int(hp.g_max))[G-1])


def log_beta_prior(beta, hp):
    return -0.5*beta*beta/hp.beta_prior_var - 0.5*math.log(2*math.pi*hp.beta_prior_var)


# ========== Group marginal likelihood ==========
def group_scatter(counts, sums, sumsq, kappa, gamma):
    sums = np.asarray(sums, dtype=np.float64)
    return sumsq - np.sum(sums*sums, axis=-1)/(counts + kappa) + gamma


def log_marginal(counts, sums, sumsq, hp, gamma):
    '''
    Vectorized log lambda_g from sufficient statistics (scalars or arrays over
    groups). An empty group gives exactly 0.
    '''
    d = hp.d
    counts = np.asarray(counts, dtype=np.float64)
    S = group_scatter(counts, sums, sumsq, hp.kappa, gamma)
    if np.any(S <= 0):
        raise ValueError(f"Non-positive group scatter {S}; sufficient statistics are corrupted")
    shape = (counts*d + hp.delta)/2
    return (-(counts*d/2)*np.log(np.pi) + (hp.delta/2)*np.log(gamma)
        - (d/2)*np.log(counts/hp.kappa + 1) + gammaln(shape) - gammaln(hp.delta/2)
        - shape*np.log(S))


def log_component_marginal(stats, hp, gamma, g=None):
    '''
    Log of the joint marginal likelihood lambda_g of the positions in group g,
    with the group mean and precision integrated out:

        x_i ~ N(mu_g, 1/tau_g I), mu_g ~ N(0, 1/(kappa tau_g) I),
        tau_g ~ Gamma(delta/2, gamma/2)

    Parameters
    ----------
    stats : GroupStats
    g : int
        Group index. If None, return the vector over all groups.
    '''
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if g is None:
        return stats.log_marginals(hp, gamma)
    return float(log_marginal(stats.counts[g], stats.sums[g], stats.sumsq[g], hp, gamma))


class MarginalTable(object):
    def __init__(self, hp, n):
        '''
        Terms of log lambda_g and of the allocation prior that depend only on
        the integer group size, tabulated for n_g = 0..n+1. Used by the
        sampler kernels; no validation of the statistics is done here.

        log lambda_g = const[n_g] + (delta/2) log gamma - shape[n_g] log S_g
        '''
        m = np.arange(n+2, dtype=np.float64)
        d = hp.d
        self.hp = hp
        self.shape = (m*d + hp.delta)/2
        self.const = (-(m*d/2)*np.log(np.pi) - (d/2)*np.log(m/hp.kappa + 1)
            + gammaln(self.shape) - gammaln(hp.delta/2))
        self.inv_size = 1.0/(m + hp.kappa)
        self.lgamma_weight = gammaln(m + hp.alpha)
        # log(n_g + alpha) + const[n_g + 1] - const[n_g]
        self.label_base = np.log(m[:-1] + hp.alpha) + np.diff(self.const)
        self._lists = (self.shape.tolist(), self.inv_size.tolist(), self.label_base.tolist())

    def as_lists(self):
        '''shape, inv_size and label_base as Python lists, for scalar loops.'''
        return self._lists

    def log_marginal(self, counts, sums, sumsq, gamma):
        S = sumsq - np.einsum('ij,ij->i', sums, sums)*self.inv_size[counts] + gamma
        return self.const[counts] + (self.hp.delta/2)*math.log(gamma) - self.shape[counts]*np.log(S)

    def label_log_weights(self, counts, sums, sumsq, x, xx, gamma):
        '''
        log(n_g + alpha) + log lambda_g(with x) - log lambda_g(without x) over
        all groups, the statistics excluding x; xx = ||x||^2.
        '''
        grown = counts + 1
        S_out = (sumsq + gamma) - np.einsum('ij,ij->i', sums, sums)*self.inv_size[counts]
        s_in = sums + x
        S_in = (sumsq + (xx + gamma)) - np.einsum('ij,ij->i', s_in, s_in)*self.inv_size[grown]
        return self.label_base[counts] - self.shape[grown]*np.log(S_in) + self.shape[counts]*np.log(S_out)

    def log_alloc_prior(self, counts):
        G, alpha = len(counts), self.hp.alpha
        return (math.lgamma(G*alpha) - G*math.lgamma(alpha) + float(np.sum(self.lgamma_weight[counts]))
            - math.lgamma(int(np.sum(counts)) + G*alpha))


@lru_cache(maxsize=16)
def marginal_table(hp, n):
    return MarginalTable(hp, n)


def log_collapsed_target(net, cfg, alloc, gamma, hp, likelihood=True):
    '''
    Collapsed log posterior (up to a constant):

        log p(Y|X,beta) + log N(beta; 0, beta_prior_var) + log pi(G)
        + log pi(c|G) + sum_g log lambda_g

    Parameters
    ----------
    likelihood : bool
        If False, the likelihood term is treated as 0 (prior-recovery harness).
    '''
    stats = GroupStats.from_positions(cfg.X, alloc.labels, alloc.G)
    loglik = log_likelihood(net, cfg) if likelihood else 0.0
    return (loglik + log_beta_prior(cfg.beta, hp) + log_g_prior(alloc.G, hp)
        + log_alloc_prior(alloc, hp) + float(np.sum(stats.log_marginals(hp, gamma))))
