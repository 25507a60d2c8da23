#!/usr/bin/env python
# -*- coding: utf-8 -*-
# Collapsed MCMC for the latent position cluster model.
# One sweep: beta, positions, Gibbs labels, one multi-actor move (M1, M2, M3
# in turn), one eject or absorb move, then tau/gamma.
# Labels are 0-based here (0..G-1); files written by the cli are 1-based.
import bisect
import itertools
import logging
import math
import multiprocessing
import time
from dataclasses import dataclass, field, replace
from typing import Optional
import numpy as np
import networkx as nx
from scipy.special import gammaln, betaln
from scipy.spatial.distance import pdist, squareform
from tqdm import tqdm
from .core import (HyperParams, LatentConfig, Allocation, GroupStats, DyadLikelihood, FlatLikelihood,
    marginal_table, log_g_prior, log_beta_prior)

logger = logging.getLogger(__name__)

KERNELS = ('beta', 'positions', 'gibbs', 'M1', 'M2', 'M3', 'eject', 'absorb')
BLOCK_MOVES = ('M1', 'M2', 'M3')
BETA_GRID = np.arange(0.5, 10.01, 0.5)


def eject_probabilities(g_max):
    '''
    eta_G, the probability of attempting an eject (rather than an absorb) at
    G components, for G = 1..g_max: 1 at G=1, 0 at g_max, 0.5 otherwise.
    '''
    eta = np.full(g_max, 0.5)
    eta[0] = 1.0
    eta[-1] = 0.0
    return eta


def build_beta_table(n, threshold=0.2):
    '''
    Eject Beta(a,a) parameter per source size n_g = 0..n.

    For each size the largest a on the grid 0.5, 1, ..., 10 is chosen such
    that the new component is proposed empty with probability at least
    `threshold`, i.e. Gamma(2a)Gamma(a+n_g) / (Gamma(a)Gamma(2a+n_g)) >= threshold.
    Falls back to a=1 when no grid value qualifies.
    '''
    m = np.arange(n+1)[:,np.newaxis]
    a = BETA_GRID[np.newaxis,:]
    log_p_empty = gammaln(2*a) + gammaln(a+m) - gammaln(a) - gammaln(2*a+m)
    ok = log_p_empty >= np.log(threshold)
    return np.where(ok.any(axis=1), np.where(ok, a, -np.inf).max(axis=1), 1.0)


@dataclass(frozen=True)
class SamplerConfig(object):
    '''
    MCMC settings.

    Parameters
    ----------
    sigma_beta, sigma_x : float
        Random walk proposal standard deviations.
    iters : int
        Number of sweeps after burn-in.
    burnin : int
    thin : int
        Keep every `thin`-th post burn-in sweep.
    seed : int
    adapt : bool
        Tune sigma_x and sigma_beta during burn-in every `adapt_interval`
        sweeps, towards `acceptance_window`. Frozen afterwards.
    eject_prob_schedule : tuple
        eta_G for G = 1..g_max. Defaults to `eject_probabilities(g_max)`.
    beta_table : tuple
        Eject Beta parameter per source size 0..n. Defaults to `build_beta_table(n)`.
    '''
    sigma_beta: float = float(np.sqrt(0.5))
    sigma_x: float = float(np.sqrt(1.7))
    iters: int = 50000
    burnin: int = 10000
    thin: int = 10
    seed: Optional[int] = None
    adapt: bool = True
    adapt_interval: int = 500
    acceptance_window: tuple = (0.25, 0.40)
    eject_prob_schedule: Optional[tuple] = None
    beta_table: Optional[tuple] = None

    def __post_init__(self):
        if not (self.sigma_beta > 0 and self.sigma_x > 0):
            raise ValueError(f"Proposal s.d. must be positive, got sigma_beta={self.sigma_beta}, sigma_x={self.sigma_x}")
        if self.thin < 1:
            raise ValueError(f"thin must be >= 1, got {self.thin}")
        if self.iters < 0 or self.burnin < 0:
            raise ValueError(f"iters and burnin must be >= 0, got {self.iters} and {self.burnin}")
        if self.adapt_interval < 1:
            raise ValueError(f"adapt_interval must be >= 1, got {self.adapt_interval}")
        if self.eject_prob_schedule is not None:
            eta = np.asarray(self.eject_prob_schedule, dtype=float)
            if np.any(eta < 0) or np.any(eta > 1):
                raise ValueError(f"Eject probabilities must lie in [0,1], got {self.eject_prob_schedule}")

    def eject_schedule(self, g_max):
        if self.eject_prob_schedule is None:
            return eject_probabilities(g_max)
        eta = np.asarray(self.eject_prob_schedule, dtype=float)
        if len(eta) != g_max:
            raise ValueError(f"eject_prob_schedule has {len(eta)} entries, expected g_max={g_max}")
        return eta

    def beta_params(self, n):
        if self.beta_table is None:
            return build_beta_table(n)
        table = np.asarray(self.beta_table, dtype=float)
        if len(table) < n+1:
            raise ValueError(f"beta_table has {len(table)} entries, expected at least n+1={n+1}")
        return table


@dataclass(frozen=True, eq=False)
class SampleRecord(object):
    iteration: int
    G: int
    beta: float
    gamma: float
    log_likelihood: float
    labels: np.ndarray
    X: np.ndarray
    accepted: tuple = ()


@dataclass
class AcceptanceReport(object):
    '''
    Proposed/accepted counts per kernel. For 'gibbs', accepted counts the
    labels that changed.
    '''
    proposed: dict = field(default_factory=lambda: dict.fromkeys(KERNELS, 0))
    accepted: dict = field(default_factory=lambda: dict.fromkeys(KERNELS, 0))
    sigma_x: float = float('nan')
    sigma_beta: float = float('nan')

    def record(self, kernel, accepted, proposed=1):
        self.proposed[kernel] += int(proposed)
        self.accepted[kernel] += int(accepted)

    def rate(self, *kernels):
        proposed = sum(self.proposed[k] for k in kernels)
        return sum(self.accepted[k] for k in kernels) / proposed if proposed else float('nan')

    @property
    def rates(self):
        return {k: self.rate(k) for k in KERNELS}

    @property
    def dimension_rate(self):
        return self.rate('eject', 'absorb')

    def snapshot(self):
        return tuple(self.accepted[k] for k in KERNELS)

    def to_dict(self):
        '''JSON-ready: rates of kernels that never fired and unset scales are None.'''
        finite = lambda v: float(v) if np.isfinite(v) else None
        return {'proposed': dict(self.proposed), 'accepted': dict(self.accepted),
            'rates': {k: finite(v) for k, v in self.rates.items()},
            'sigma_x': finite(self.sigma_x), 'sigma_beta': finite(self.sigma_beta)}


@dataclass
class ChainState(object):
    '''
    Current state of one chain, with cached distances D, group sufficient
    statistics and log-likelihood. T holds the dyad terms and ll_actor their
    row sums, the likelihood share of each actor.
    '''
    X: np.ndarray
    beta: float
    labels: np.ndarray
    G: int
    stats: GroupStats
    gamma: float
    tau: np.ndarray
    loglik: float
    D: np.ndarray
    T: np.ndarray
    ll_actor: np.ndarray

    @classmethod
    def from_config(cls, cfg, alloc, gamma, lik, tau=None):
        X = np.array(cfg.X, dtype=np.float64)
        if X.shape[0] != alloc.n:
            raise ValueError(f"Positions have {X.shape[0]} rows but the allocation has {alloc.n} labels")
        D = squareform(pdist(X))
        stats = GroupStats.from_positions(X, alloc.labels, alloc.G)
        tau = np.ones(alloc.G) if tau is None else np.array(tau, dtype=np.float64)
        T = lik.term_matrix(D, cfg.beta)
        return cls(X, cfg.beta, alloc.labels.copy(), alloc.G, stats, float(gamma), tau, lik.total(D, cfg.beta), D,
            T, T.sum(axis=1))

    def refresh_likelihood(self, lik):
        self.T = lik.term_matrix(self.D, self.beta)
        self.ll_actor = self.T.sum(axis=1)
        self.loglik = lik.total(self.D, self.beta)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def cfg(self):
        return LatentConfig(self.X, self.beta)

    @property
    def alloc(self):
        return Allocation(self.labels, self.G)

    def is_consistent(self, lik, rtol=1e-8):
        '''Cached values agree with a recomputation.'''
        loglik = lik.total(squareform(pdist(self.X)), self.beta)
        T = lik.term_matrix(squareform(pdist(self.X)), self.beta)
        return (np.isclose(self.loglik, loglik, rtol=rtol, atol=1e-12)
            and np.allclose(self.T, T, rtol=rtol, atol=1e-10)
            and np.allclose(self.ll_actor, T.sum(axis=1), rtol=rtol, atol=1e-8)
            and np.allclose(self.D, squareform(pdist(self.X)), rtol=1e-10, atol=1e-12)
            and self.stats.G == self.G and len(self.tau) == self.G
            and self.stats.matches(self.X, self.labels))


def _accept(log_ratio, rng):
    # A NaN ratio is rejected
    return bool(log_ratio >= 0.0 or rng.random() < math.exp(log_ratio))


# ========== Continuous parameters ==========
def update_beta(state, lik, hp, sc, rng):
    '''
    Random walk Metropolis-Hastings update of beta.
    '''
    beta_new = state.beta + sc.sigma_beta*rng.standard_normal()
    loglik_new = lik.total(state.D, beta_new)
    log_ratio = loglik_new - state.loglik + log_beta_prior(beta_new, hp) - log_beta_prior(state.beta, hp)
    if _accept(log_ratio, rng):
        state.beta = beta_new
        state.refresh_likelihood(lik)
        return True
    return False


def update_positions(state, lik, hp, sc, rng):
    '''
    Random walk Metropolis-Hastings update of each x_i in turn, targeting
    p_i(Y|X,beta) * lambda_{c_i}. Returns the number of accepted moves.

    Only the scatter S_g of the actor's group changes, so the ratio of
    lambda_g reduces to -shape(n_g) * (log S_new - log S_old).
    '''
    X, stats, labels = state.X, state.stats, state.labels
    table = marginal_table(hp, state.n)
    gamma = state.gamma
    steps = sc.sigma_x*rng.standard_normal(X.shape)
    log_u = np.log(rng.random(state.n))
    n_accept = 0
    for i in range(state.n):
        x_old = X[i]
        x_new = x_old + steps[i]
        if lik.flat:
            dist_new, ll_new = None, 0.0
        else:
            dist_new = _distances_to(X, x_new)
            terms_new = lik.actor_terms(dist_new, state.beta, i)
            ll_new = float(terms_new.sum())
        ll_old = state.ll_actor[i]
        g = labels[i]
        m = stats.counts[g]
        s_old = stats.sums[g]
        s_new = s_old + steps[i]
        q_old = stats.sumsq[g]
        q_new = q_old + float(x_new @ x_new) - float(x_old @ x_old)
        S_old = q_old - float(s_old @ s_old)*table.inv_size[m] + gamma
        S_new = q_new - float(s_new @ s_new)*table.inv_size[m] + gamma
        log_ratio = ll_new - ll_old - table.shape[m]*(math.log(S_new) - math.log(S_old))
        if log_u[i] < log_ratio:
            stats.sums[g] = s_new
            stats.sumsq[g] = q_new
            if dist_new is None:
                dist_new = _distances_to(X, x_new)
            else:
                state.ll_actor += terms_new - state.T[i]
                state.ll_actor[i] = ll_new
                state.T[i,:] = terms_new
                state.T[:,i] = terms_new
                state.loglik += ll_new - ll_old
            X[i] = x_new
            dist_new[i] = 0.0
            state.D[i,:] = dist_new
            state.D[:,i] = dist_new
            n_accept += 1
    return n_accept


def _distances_to(X, x):
    diff = X - x
    return np.sqrt(np.einsum('ij,ij->i', diff, diff))


def update_tau_gamma(state, hp, rng):
    '''
    Uncollapsed draws: tau_g ~ Gamma((n_g d + delta)/2, S_g/2) for every group,
    then gamma ~ Gamma((G delta + s)/2, (sum tau + r)/2) (shape, rate).
    '''
    S = state.stats.scatter(hp, state.gamma)
    shape = (state.stats.counts*hp.d + hp.delta)/2
    state.tau = rng.gamma(shape, 2.0/S)
    state.gamma = float(rng.gamma((state.G*hp.delta + hp.gamma_s)/2, 2.0/(state.tau.sum() + hp.gamma_r)))


# ========== Allocation ==========
def label_log_weights(stats, x, hp, gamma):
    '''
    Unnormalized log conditional of a single actor at x over the G groups,
    with `stats` excluding that actor:

        log(n_g + alpha) + log lambda_g(with x) - log lambda_g(without x)
    '''
    table = marginal_table(hp, int(stats.counts.sum()) + 1)
    return table.label_log_weights(stats.counts, stats.sums, stats.sumsq, x, float(x @ x), gamma)


def label_conditional(state, i, hp):
    '''
    Full conditional probabilities of c_i over 0..G-1.
    '''
    x = state.X[i]
    stats = state.stats.copy()
    stats.remove(state.labels[i], x)
    logw = label_log_weights(stats, x, hp, state.gamma)
    return np.exp(logw - np.logaddexp.reduce(logw))


def gibbs_labels(state, hp, rng):
    '''
    Resample every c_i from its full conditional. Returns the number of labels
    that changed.
    '''
    labels, G, gamma = state.labels, state.G, state.gamma
    shape, inv_size, base = marginal_table(hp, state.n).as_lists()
    # Python floats in the inner loop; G is small
    counts = state.stats.counts.tolist()
    sums = state.stats.sums.tolist()
    sumsq = state.stats.sumsq.tolist()
    u = rng.random(state.n).tolist()

    def weight_out(g):
        # shape(n_g) log S_g, statistics without the current actor
        return shape[counts[g]]*math.log(sumsq[g] + gamma - _sq(sums[g])*inv_size[counts[g]])

    out = [weight_out(g) for g in range(G)]
    moved = 0
    for i, x in enumerate(state.X.tolist()):
        xx = _sq(x)
        g_old = int(labels[i])
        counts[g_old] -= 1
        sums[g_old] = [a - b for a, b in zip(sums[g_old], x)]
        sumsq[g_old] -= xx
        out[g_old] = weight_out(g_old)
        logw = [base[counts[g]] + out[g] - shape[counts[g]+1]*math.log(
            sumsq[g] + xx + gamma - _sq([a + b for a, b in zip(sums[g], x)])*inv_size[counts[g]+1])
            for g in range(G)]
        top = max(logw)
        cdf = list(itertools.accumulate(math.exp(w - top) for w in logw))
        g_new = min(bisect.bisect_right(cdf, u[i]*cdf[-1]), G-1)
        counts[g_new] += 1
        sums[g_new] = [a + b for a, b in zip(sums[g_new], x)]
        sumsq[g_new] += xx
        out[g_new] = weight_out(g_new)
        labels[i] = g_new
        moved += int(g_new != g_old)
    state.stats.counts[:] = counts
    state.stats.sums[:] = sums
    state.stats.sumsq[:] = sumsq
    return moved


def _sq(v):
    return sum(a*a for a in v)


def _split_stats(X, members, in_first):
    '''Sufficient statistics of the two parts of `members`.'''
    Xm = X[members]
    sq = np.einsum('ij,ij->i', Xm, Xm)
    counts = np.array([in_first.sum(), (~in_first).sum()], dtype=np.intp)
    sums = np.stack([Xm[in_first].sum(axis=0), Xm[~in_first].sum(axis=0)])
    sumsq = np.array([sq[in_first].sum(), sq[~in_first].sum()])
    return counts, sums, sumsq


def _pair_log_target(counts, sums, sumsq, table, gamma):
    # Terms of the collapsed target that change when actors move between two groups
    return float(np.sum(table.lgamma_weight[counts]) + np.sum(table.log_marginal(counts, sums, sumsq, gamma)))


def _pick_pair(G, rng, first=None):
    g1 = int(rng.integers(G)) if first is None else first
    g2 = (g1 + 1 + int(rng.integers(G-1))) % G
    return g1, g2


def _log_choose(n, m):
    return gammaln(n+1) - gammaln(m+1) - gammaln(n-m+1)


def _sequential_allocation(X, order, assign, table, gamma, rng=None):
    '''
    Allocate the actors in `order` one at a time to the first (True) or second
    group from the running conditional restricted to the two groups, both
    starting empty. With `rng`, draw the allocation; otherwise replay `assign`.
    Returns the allocation and its log proposal probability.
    '''
    d = X.shape[1]
    counts, sums, sumsq = np.zeros(2, dtype=np.intp), np.zeros((2, d)), np.zeros(2)
    out = np.zeros(len(order), dtype=bool)
    log_q = 0.0
    for t, i in enumerate(order):
        x = X[i]
        xx = float(x @ x)
        logw = table.label_log_weights(counts, sums, sumsq, x, xx, gamma)
        logp = logw - np.logaddexp(logw[0], logw[1])
        first = bool(rng.random() < math.exp(logp[0])) if rng is not None else bool(assign[t])
        h = 0 if first else 1
        log_q += logp[h]
        counts[h] += 1
        sums[h] += x
        sumsq[h] += xx
        out[t] = first
    return out, log_q


def move_block(state, variant, hp, rng):
    '''
    Metropolis-Hastings move reallocating several actors between two
    components g1 != g2.

    M1 : every actor of g1 and g2 goes to g1 with probability p ~ Beta(alpha, alpha).
    M2 : a uniform m-subset of a nonempty g1 (m uniform on 1..n_g1) moves to g2.
    M3 : the actors of g1 and g2 are reallocated one by one in random order
         from the conditional restricted to {g1, g2}.

    A no-op returning False when G < 2.
    '''
    if variant not in BLOCK_MOVES:
        raise ValueError(f"Unknown block move '{variant}', choose from {BLOCK_MOVES}")
    G = state.G
    if G < 2:
        return False
    X, labels, stats = state.X, state.labels, state.stats
    table = marginal_table(hp, state.n)
    if variant == 'M2':
        nonempty = np.flatnonzero(stats.counts > 0)
        g1, g2 = _pick_pair(G, rng, first=int(nonempty[rng.integers(len(nonempty))]))
    else:
        g1, g2 = _pick_pair(G, rng)
    members = np.flatnonzero((labels == g1) | (labels == g2))
    in_g1 = labels[members] == g1
    n1, n2 = int(in_g1.sum()), int((~in_g1).sum())

    if variant == 'M1':
        a = hp.alpha
        p = rng.beta(a, a)
        new_in = rng.random(members.size) < p
        n1_new = int(new_in.sum())
        log_q = betaln(a+n1, a+n2) - betaln(a+n1_new, a+members.size-n1_new)
    elif variant == 'M2':
        m = int(rng.integers(1, n1+1))
        moving = rng.choice(np.flatnonzero(in_g1), size=m, replace=False)
        new_in = in_g1.copy()
        new_in[moving] = False
        n_nonempty_new = np.count_nonzero(stats.counts > 0) - int(m == n1) + int(n2 == 0)
        log_fwd = -np.log(np.count_nonzero(stats.counts > 0)) - np.log(n1) - _log_choose(n1, m)
        log_rev = -np.log(n_nonempty_new) - np.log(n2+m) - _log_choose(n2+m, m)
        log_q = log_rev - log_fwd
    else:
        order = rng.permutation(members.size)
        new_order, log_fwd = _sequential_allocation(X, members[order], None, table, state.gamma, rng)
        _, log_rev = _sequential_allocation(X, members[order], in_g1[order], table, state.gamma)
        new_in = np.empty_like(in_g1)
        new_in[order] = new_order
        log_q = log_rev - log_fwd

    old = _split_stats(X, members, in_g1)
    new = _split_stats(X, members, new_in)
    log_ratio = _pair_log_target(*new, table, state.gamma) - _pair_log_target(*old, table, state.gamma) + log_q
    if not _accept(log_ratio, rng):
        return False
    labels[members] = np.where(new_in, g1, g2)
    for h, g in enumerate([g1, g2]):
        stats.set_group(g, new[0][h], new[1][h], new[2][h])
    return True


# ========== Dimension moves ==========
def _log_dimension_target(stats, G, table, gamma):
    # Terms of the collapsed target that depend on the allocation and G
    return (log_g_prior(G, table.hp) + table.log_alloc_prior(stats.counts)
        + float(np.sum(table.log_marginal(stats.counts, stats.sums, stats.sumsq, gamma))))


def _pick_ordered_pair(m, rng):
    # Uniform over 0 <= g < k < m
    g = int(rng.integers(m))
    k = int(rng.integers(m-1))
    if k >= g:
        k += 1
    return min(g, k), max(g, k)


def propose_eject(state, hp, sc, g, k, moved):
    '''
    Log acceptance ratio of ejecting the actors of component g flagged by
    `moved` into a new component inserted at label k (g < k <= G).

    Returns
    -------
    log_rho : float
    stats : GroupStats
        Statistics of the proposed state.
    '''
    G = state.G
    if not (0 <= g < k <= G):
        raise ValueError(f"Eject needs 0 <= g < k <= G, got g={g}, k={k}, G={G}")
    eta = sc.eject_schedule(hp.g_max)
    table = marginal_table(hp, state.n)
    if G >= hp.g_max:
        raise ValueError(f"Cannot eject at G={G} >= g_max={hp.g_max}")
    members = np.flatnonzero(state.labels == g)
    moved = np.asarray(moved, dtype=bool)
    if moved.shape != members.shape:
        raise ValueError(f"moved has {moved.size} flags but component {g} has {members.size} members")
    a = sc.beta_params(state.n)[members.size]
    new_stats = state.stats.copy()
    new_stats.insert_group(k)
    split = _split_stats(state.X, members, ~moved)
    for h, target in enumerate([g, k]):
        new_stats.set_group(target, split[0][h], split[1][h], split[2][h])
    n_stay, n_move = split[0]
    log_rho = (_log_dimension_target(new_stats, G+1, table, state.gamma)
        - _log_dimension_target(state.stats, G, table, state.gamma)
        + np.log1p(-eta[G]) - np.log(eta[G-1])
        + betaln(a, a) - betaln(a+n_stay, a+n_move))
    return float(log_rho), new_stats


def propose_absorb(state, hp, sc, g, k):
    '''
    Log acceptance ratio of component g absorbing component k (g < k), the
    exact reverse of `propose_eject`.
    '''
    G = state.G
    if not (0 <= g < k < G):
        raise ValueError(f"Absorb needs 0 <= g < k < G, got g={g}, k={k}, G={G}")
    eta = sc.eject_schedule(hp.g_max)
    table = marginal_table(hp, state.n)
    counts = state.stats.counts
    n_g, n_k = int(counts[g]), int(counts[k])
    a = sc.beta_params(state.n)[n_g + n_k]
    new_stats = state.stats.copy()
    new_stats.set_group(g, counts[g] + counts[k], new_stats.sums[g] + new_stats.sums[k],
        new_stats.sumsq[g] + new_stats.sumsq[k])
    new_stats.drop_group(k)
    log_upsilon = (_log_dimension_target(new_stats, G-1, table, state.gamma)
        - _log_dimension_target(state.stats, G, table, state.gamma)
        + np.log(eta[G-2]) - np.log1p(-eta[G-1])
        + betaln(a+n_g, a+n_k) - betaln(a, a))
    return float(log_upsilon), new_stats


def eject(state, hp, sc, rng):
    '''
    Eject part of a component into a new one (G -> G+1).

    The source g and the label k of the new component are a uniform pair
    g < k among 0..G, so the new component lands at a random label. Each
    member of g moves with probability p ~ Beta(a,a), a = beta_table[n_g].
    '''
    G = state.G
    if G >= hp.g_max:
        return False
    g, k = _pick_ordered_pair(G+1, rng)
    a = sc.beta_params(state.n)[int(state.stats.counts[g])]
    p = rng.beta(a, a)
    members = np.flatnonzero(state.labels == g)
    moved = rng.random(members.size) < p
    log_rho, new_stats = propose_eject(state, hp, sc, g, k, moved)
    if not _accept(log_rho, rng):
        return False
    state.labels[state.labels >= k] += 1
    state.labels[members[moved]] = k
    state.stats = new_stats
    state.tau = np.insert(state.tau, k, hp.delta/state.gamma)
    state.G = G + 1
    return True


def absorb(state, hp, sc, rng):
    '''
    Merge a component k into g < k (G -> G-1); labels above k shift down.
    '''
    G = state.G
    if G < 2:
        return False
    g, k = _pick_ordered_pair(G, rng)
    log_upsilon, new_stats = propose_absorb(state, hp, sc, g, k)
    if not _accept(log_upsilon, rng):
        return False
    state.labels[state.labels == k] = g
    state.labels[state.labels > k] -= 1
    state.stats = new_stats
    state.tau = np.delete(state.tau, k)
    state.G = G - 1
    return True


# ========== Chain ==========
def initial_positions(net, d=2):
    '''
    Classical multidimensional scaling of the geodesic distances. Unreachable
    pairs are placed at the largest finite distance plus one.
    '''
    graph = net.to_graph()
    if net.directed:
        graph = graph.to_undirected()
    D = nx.floyd_warshall_numpy(graph, nodelist=range(net.n))
    finite = np.isfinite(D)
    D[~finite] = D[finite].max() + 1
    n = net.n
    J = np.eye(n) - 1.0/n
    B = -0.5 * J @ (D**2) @ J
    w, V = np.linalg.eigh(B)
    top = np.argsort(w)[::-1][:d]
    X = np.zeros((n, d))
    X[:,:len(top)] = V[:,top] * np.sqrt(np.clip(w[top], 0, None))
    return X


def init_state(net, hp, lik, rng):
    '''
    MDS positions, beta = 0, a single component, gamma at its prior mean and
    tau drawn from its conditional.
    '''
    cfg = LatentConfig(initial_positions(net, hp.d), 0.0)
    state = ChainState.from_config(cfg, Allocation(np.zeros(net.n, dtype=np.intp), 1), hp.gamma_prior_mean, lik)
    S = state.stats.scatter(hp, state.gamma)
    state.tau = rng.gamma((state.stats.counts*hp.d + hp.delta)/2, 2.0/S)
    return state


def tune_scale(scale, rate, window=(0.25, 0.40)):
    '''
    Shrink the proposal s.d. when acceptance is below the window, grow it
    when above.
    '''
    if rate < window[0]:
        return scale*0.8
    if rate > window[1]:
        return scale*1.2
    return scale


def run_chain(net, hp=None, sc=None, likelihood=True, progress=False, callback=None):
    '''
    Run one chain.

    Parameters
    ----------
    net : Network
    hp : HyperParams
    sc : SamplerConfig
    likelihood : bool
        If False, the likelihood is flat and the chain targets the prior
        (test harness only).
    progress : bool
        Show a tqdm progress bar over sweeps.
    callback : callable
        Called with every SampleRecord as it is recorded.

    Returns
    -------
    records : list of SampleRecord
    report : AcceptanceReport
        Counts over the post burn-in sweeps.
    '''
    hp = HyperParams() if hp is None else hp
    sc = SamplerConfig() if sc is None else sc
    rng = np.random.default_rng(sc.seed)
    lik = DyadLikelihood(net) if likelihood else FlatLikelihood(net.n)
    eta = sc.eject_schedule(hp.g_max)
    sc = replace(sc, eject_prob_schedule=tuple(eta), beta_table=tuple(sc.beta_params(net.n)))
    state = init_state(net, hp, lik, rng)
    report, window = AcceptanceReport(), AcceptanceReport()
    records = []
    start = time.perf_counter()
    sweeps = range(1, sc.burnin + sc.iters + 1)
    if progress:
        sweeps = tqdm(sweeps, desc='sweeps', unit='sweep')
    for t in sweeps:
        counters = window if t <= sc.burnin else report
        counters.record('beta', update_beta(state, lik, hp, sc, rng))
        counters.record('positions', update_positions(state, lik, hp, sc, rng), proposed=state.n)
        counters.record('gibbs', gibbs_labels(state, hp, rng), proposed=state.n)
        if state.G >= 2:
            variant = BLOCK_MOVES[(t-1) % 3]
            counters.record(variant, move_block(state, variant, hp, rng))
        if hp.g_max > 1:
            if rng.random() < eta[state.G-1]:
                counters.record('eject', eject(state, hp, sc, rng))
            else:
                counters.record('absorb', absorb(state, hp, sc, rng))
        update_tau_gamma(state, hp, rng)

        if t <= sc.burnin:
            if sc.adapt and t % sc.adapt_interval == 0:
                sigma_x = tune_scale(sc.sigma_x, window.rate('positions'), sc.acceptance_window)
                sigma_beta = tune_scale(sc.sigma_beta, window.rate('beta'), sc.acceptance_window)
                logger.debug(f"Sweep {t}: acceptance positions {window.rate('positions'):.3f}, "
                    f"beta {window.rate('beta'):.3f}; sigma_x {sigma_x:.4g}, sigma_beta {sigma_beta:.4g}")
                sc = replace(sc, sigma_x=sigma_x, sigma_beta=sigma_beta)
                window = AcceptanceReport()
        elif (t - sc.burnin) % sc.thin == 0:
            record = SampleRecord(t, state.G, state.beta, state.gamma, state.loglik,
                state.labels.copy(), state.X.copy(), report.snapshot())
            records.append(record)
            if callback is not None:
                callback(record)
    report.sigma_x, report.sigma_beta = sc.sigma_x, sc.sigma_beta
    rates = ', '.join(f"{k} {v:.3f}" for k, v in report.rates.items() if np.isfinite(v))
    logger.info(f"Chain finished in {time.perf_counter()-start:.1f} s: {len(records)} samples; acceptance {rates}")
    return records, report


def _run_chain_star(args):
    return run_chain(*args)


def chain_seeds(seed, repeats):
    '''Independent integer seeds spawned from one SeedSequence.'''
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(repeats)]


def run_chains(net, hp=None, sc=None, repeats=1, workers=None, likelihood=True, progress=False):
    '''
    Run `repeats` independent chains with seeds spawned from `sc.seed`, on a
    process pool when workers > 1. Results are in seed order.
    '''
    hp = HyperParams() if hp is None else hp
    sc = SamplerConfig() if sc is None else sc
    pooled = workers is not None and workers > 1 and repeats > 1
    tasks = [(net, hp, replace(sc, seed=seed), likelihood, progress and not pooled)
        for seed in chain_seeds(sc.seed, repeats)]
    if pooled:
        with multiprocessing.Pool(min(workers, repeats)) as pool:
            return pool.map(_run_chain_star, tasks)
    return [_run_chain_star(task) for task in tasks]
