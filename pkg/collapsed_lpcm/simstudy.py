#!/usr/bin/env python
# -*- coding: utf-8 -*-
# Two-cluster benchmark networks with a controlled separation ratio
# r = E_within(p) / E_between(p), and the Monte-Carlo lookup table mapping
# (mu, tau) to r.
import logging
import multiprocessing
import warnings
from dataclasses import dataclass, replace
import numpy as np
import pandas as pd
from scipy.special import expit
from .netdata import Network
from .core import HyperParams
from .sampler import SamplerConfig, run_chain, chain_seeds

logger = logging.getLogger(__name__)

MU_GRID = np.linspace(0.1, 2, 20)
TAU_GRID = np.linspace(1, 20, 20)
SCENARIOS = (1.5, 2.5, 5, 10, 15, 20)


@dataclass(frozen=True)
class Scenario(object):
    '''
    Two equally weighted spherical clusters centred at (mu,mu) and (-mu,-mu)
    with common precision tau.
    '''
    r_target: float
    mu: float
    tau: float
    n_actors: int = 50
    weights: tuple = (0.5, 0.5)

    def __post_init__(self):
        if self.r_target < 1:
            raise ValueError(f"Separation ratio must be >= 1, got {self.r_target}")
        if not (self.mu > 0 and self.tau > 0):
            raise ValueError(f"mu and tau must be positive, got mu={self.mu}, tau={self.tau}")
        if self.n_actors < 2:
            raise ValueError(f"Need at least 2 actors, got {self.n_actors}")
        if len(self.weights) != 2 or not np.isclose(sum(self.weights), 1):
            raise ValueError(f"weights must be two probabilities summing to 1, got {self.weights}")

    @property
    def centers(self):
        return np.array([[self.mu, self.mu], [-self.mu, -self.mu]])


@dataclass(frozen=True, eq=False)
class CalibrationTable(object):
    '''
    r_hat[a,b] is the estimated ratio at (mu[a], tau[b]).
    '''
    mu: np.ndarray
    tau: np.ndarray
    r_hat: np.ndarray
    N: int
    seed: int

    def __post_init__(self):
        if self.r_hat.shape != (len(self.mu), len(self.tau)):
            raise ValueError(f"r_hat has shape {self.r_hat.shape}, expected {(len(self.mu), len(self.tau))}")

    def to_frame(self):
        M, T = np.meshgrid(self.mu, self.tau, indexing='ij')
        return pd.DataFrame({'mu': M.ravel(), 'tau': T.ravel(), 'r_hat': self.r_hat.ravel(),
            'N': self.N, 'seed': self.seed})

    @classmethod
    def from_frame(cls, df):
        df = df.sort_values(['mu', 'tau'], kind='stable')
        mu, tau = np.unique(df['mu'].values), np.unique(df['tau'].values)
        return cls(mu, tau, df['r_hat'].values.reshape(len(mu), len(tau)), int(df['N'].iloc[0]), int(df['seed'].iloc[0]))


def _center(mu, d=2):
    mu = np.asarray(mu, dtype=np.float64)
    return np.full(d, float(mu)) if mu.ndim == 0 else mu


def _mean_link_prob(center, other, tau, z1, z2, beta=0.0):
    x = center + z1/np.sqrt(tau)
    y = other + z2/np.sqrt(tau)
    return float(np.mean(expit(beta - np.linalg.norm(x - y, axis=1))))


def estimate_link_prob(mu, tau, s, N, rng, beta=0.0):
    '''
    Monte-Carlo estimate of E_s(p): the expected link probability between an
    actor drawn from N(mu, 1/tau I) and one drawn from N(s*mu, 1/tau I).

    Parameters
    ----------
    mu : float or array
        Scalar mu means the centre (mu, mu).
    s : {+1, -1}
        Same cluster (+1) or opposite cluster (-1).
    N : int
        Number of simulated pairs (>= 1000).
    '''
    if s not in (1, -1):
        raise ValueError(f"s must be +1 or -1, got {s}")
    if N < 1000:
        raise ValueError(f"N must be >= 1000, got {N}")
    center = _center(mu)
    z = rng.standard_normal((2, N, len(center)))
    return _mean_link_prob(center, s*center, tau, z[0], z[1], beta)


def _calibrate_cell(args):
    mu, tau, N, seed, cell = args
    # Common random numbers for the within and between estimates
    rng = np.random.default_rng([seed, cell])
    z = rng.standard_normal((2, N, 2))
    center = _center(mu)
    return _mean_link_prob(center, center, tau, z[0], z[1]) / _mean_link_prob(center, -center, tau, z[0], z[1])


def build_lookup(N=10000, seed=0, workers=None):
    '''
    Lookup table of r over the 20x20 (mu, tau) grid, beta fixed at 0.

    Each cell has its own random stream derived from (seed, cell index), so
    the table does not depend on `workers`.
    '''
    if N < 1000:
        raise ValueError(f"N must be >= 1000, got {N}")
    cells = [(mu, tau, N, seed, a*len(TAU_GRID)+b)
        for a, mu in enumerate(MU_GRID) for b, tau in enumerate(TAU_GRID)]
    if workers is not None and workers > 1:
        with multiprocessing.Pool(workers) as pool:
            r_hat = pool.map(_calibrate_cell, cells)
    else:
        r_hat = [_calibrate_cell(cell) for cell in cells]
    return CalibrationTable(MU_GRID.copy(), TAU_GRID.copy(), np.reshape(r_hat, (len(MU_GRID), len(TAU_GRID))), N, seed)


def pick_params(table, r_target):
    '''
    Grid pair (mu, tau) whose r_hat is closest to `r_target`; ties go to the
    smaller mu, then the smaller tau. Warns if the target is outside the
    table range.
    '''
    if r_target < table.r_hat.min() or r_target > table.r_hat.max():
        warnings.warn(f"Target r={r_target} is outside the table range "
            f"[{table.r_hat.min():.3f}, {table.r_hat.max():.3f}]; using the closest entry")
    a, b = np.unravel_index(np.argmin(np.abs(table.r_hat - r_target)), table.r_hat.shape)
    return float(table.mu[a]), float(table.tau[b])


def scenario_for(table, r_target, n_actors=50):
    mu, tau = pick_params(table, r_target)
    return Scenario(r_target, mu, tau, n_actors)


def simulate_network(scenario, beta, rng):
    '''
    Simulate an undirected network from the two-cluster latent position model.

    Returns
    -------
    net : Network
    labels : array of shape (n,)
        True cluster labels (0-based).
    X : array of shape (n,2)
        True latent positions.
    '''
    n = scenario.n_actors
    labels = rng.choice(2, size=n, p=scenario.weights)
    X = scenario.centers[labels] + rng.standard_normal((n, 2))/np.sqrt(scenario.tau)
    dist = np.linalg.norm(X[:,np.newaxis,:] - X[np.newaxis,:,:], axis=-1)
    ties = rng.random((n, n)) < expit(beta - dist)
    A = np.tril(ties, k=-1)
    A = (A | A.T).astype(np.int8)
    return Network(A, directed=False), labels, X


def write_header(fo, header):
    for key, value in (header or {}).items():
        fo.write(f"# {key}: {value}\n")


def write_truth(path, labels, X, header=None):
    '''actor, true_label (both 1-based), x1, x2.'''
    df = pd.DataFrame({'actor': np.arange(1, len(labels)+1), 'true_label': np.asarray(labels)+1})
    for k in range(X.shape[1]):
        df[f"x{k+1}"] = X[:,k]
    with open(path, 'w') as fo:
        write_header(fo, header)
        df.to_csv(fo, index=False, float_format='%.10g')


def write_lookup(table, path, header=None):
    with open(path, 'w') as fo:
        write_header(fo, header)
        table.to_frame().to_csv(fo, index=False, float_format='%.10g')


def read_lookup(path):
    return CalibrationTable.from_frame(pd.read_csv(path, comment='#'))


def _study_task(args):
    scenario, net_seed, hp, sc = args
    net, labels, X = simulate_network(scenario, 0.0, np.random.default_rng(net_seed))
    records, report = run_chain(net, hp, sc)
    p_G = np.bincount([r.G-1 for r in records], minlength=hp.g_max) / max(len(records), 1)
    return p_G, report.dimension_rate


def run_study(scenario, networks=100, hp=None, sc=None, seed=0, workers=None):
    '''
    Simulate `networks` networks for one scenario and fit each one.

    Returns
    -------
    df : pandas.DataFrame
        One row per network: network, r_target, mu, tau, p_G1..p_G{g_max},
        modal_G, dimension_rate.
    '''
    hp = HyperParams() if hp is None else hp
    sc = SamplerConfig() if sc is None else sc
    seeds = chain_seeds(seed, 2*networks)
    tasks = [(scenario, seeds[k], hp, replace(sc, seed=seeds[networks+k])) for k in range(networks)]
    if workers is not None and workers > 1:
        with multiprocessing.Pool(workers) as pool:
            results = pool.map(_study_task, tasks)
    else:
        results = [_study_task(task) for task in tasks]
    rows = []
    for k, (p_G, rate) in enumerate(results):
        row = {'network': k+1, 'r_target': scenario.r_target, 'mu': scenario.mu, 'tau': scenario.tau}
        row.update({f"p_G{g+1}": p for g, p in enumerate(p_G)})
        row.update({'modal_G': int(np.argmax(p_G))+1, 'dimension_rate': rate})
        rows.append(row)
    logger.info(f"Scenario r={scenario.r_target}: modal G=2 in "
        f"{np.mean([r['modal_G'] == 2 for r in rows]):.0%} of {networks} networks")
    return pd.DataFrame(rows)
