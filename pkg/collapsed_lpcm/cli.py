#!/usr/bin/env python
# -*- coding: utf-8 -*-
# Batch front-end.
#
#   collapsed-lpcm fit --dataset karate --seed 1 --out runs/karate
#   collapsed-lpcm fit --input monks.edges --repeats 100 --out runs/monks
#   collapsed-lpcm summarize --input monks.edges --samples runs/monks/samples.csv
#   collapsed-lpcm bic --input monks.edges --samples runs/monks/samples.csv
#   collapsed-lpcm calibrate --N 10000 --out study
#   collapsed-lpcm simulate --r 1.5 --networks 100 --lookup study/lookup.csv --out study/r1.5
#
# Options are resolved as defaults < --config JSON file < command line flags.
# Every output file starts with "# key: value" provenance lines.
import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field, asdict, replace
from os import path
import numpy as np
import pandas as pd
from . import __version__
from .core import HyperParams
from .netdata import load_edge_list, load_adjacency_csv, write_edge_list
from .sampler import SamplerConfig, SampleRecord, KERNELS, run_chains, chain_seeds
from .postprocess import EmptySampleError, summarize
from .bic import bic_report
from .simstudy import (build_lookup, read_lookup, write_lookup, write_truth, write_header,
    scenario_for, simulate_network, run_study)
from .data import load_dataset

logger = logging.getLogger(__name__)

ENV_THREADS = 'COLLAPSED_LPCM_THREADS'

DEFAULTS = {
    # Model
    'alpha': 3.0,
    'delta': 2.0,
    'kappa': 0.1,
    'gamma_mean': 0.103,
    'gamma_sd': 0.103/4,
    'beta_prior_var': 2.0,
    'g_rate': 1.0,
    'gmax': 10,
    'd': 2,
    # Sampler
    'iters': 50000,
    'burnin': 10000,
    'thin': 10,
    'seed': 1,
    'sigma_x': float(np.sqrt(1.7)),
    'sigma_beta': float(np.sqrt(0.5)),
    'no_adapt': False,
    'repeats': 1,
    # Input/output
    'input': None,
    'dataset': None,
    'directed': False,
    'n': None,
    'out': '.',
}


def derive_gamma_hyperprior(mean, sd):
    '''
    (s, r) such that Gamma(s/2, r/2) (shape, rate) has the given mean and sd:
    mean = s/r and sd^2 = 2s/r^2.
    '''
    if not (mean > 0 and sd > 0):
        raise ValueError(f"mean and sd must be positive, got mean={mean}, sd={sd}")
    r = 2*mean/sd**2
    return mean*r, r


def worker_count(repeats):
    cap = os.environ.get(ENV_THREADS)
    try:
        cap = int(cap) if cap else os.cpu_count() or 1
    except ValueError:
        raise ValueError(f"{ENV_THREADS} must be an integer, got {cap!r}")
    return max(1, min(repeats, cap))


@dataclass(frozen=True)
class RunConfig(object):
    hp: HyperParams
    sc: SamplerConfig
    params: dict = field(default_factory=dict)

    @classmethod
    def from_params(cls, params):
        s, r = derive_gamma_hyperprior(params['gamma_mean'], params['gamma_sd'])
        hp = HyperParams(alpha=params['alpha'], delta=params['delta'], kappa=params['kappa'],
            gamma_s=s, gamma_r=r, beta_prior_var=params['beta_prior_var'], g_rate=params['g_rate'],
            g_max=int(params['gmax']), d=int(params['d']))
        sc = SamplerConfig(sigma_beta=params['sigma_beta'], sigma_x=params['sigma_x'],
            iters=int(params['iters']), burnin=int(params['burnin']), thin=int(params['thin']),
            seed=params['seed'], adapt=not params['no_adapt'])
        if int(params['repeats']) < 1:
            raise ValueError(f"repeats must be >= 1, got {params['repeats']}")
        return cls(hp, sc, params)

    def __getitem__(self, key):
        return self.params[key]

    def load_network(self):
        if self['dataset'] is not None:
            return load_dataset(self['dataset'])
        if self['input'] is None:
            raise ValueError("No network given: use --input or --dataset")
        if self['input'].endswith('.csv'):
            return load_adjacency_csv(self['input'], directed=self['directed'])
        return load_edge_list(self['input'], self['n'], directed=self['directed'])

    def header(self, command, **extra):
        '''Provenance lines shared by all output files of a command.'''
        h = {'collapsed_lpcm': __version__, 'command': command}
        h.update({k: self.params[k] for k in ['input', 'dataset', 'directed'] if self.params.get(k) is not None})
        h.update(asdict(self.hp))
        h.update({k: v for k, v in asdict(self.sc).items() if k not in ['eject_prob_schedule', 'beta_table']})
        h.update(extra)
        return h


def resolve_params(args):
    '''Defaults < --config JSON < explicit flags.'''
    params = dict(DEFAULTS)
    config = vars(args).get('config')
    if config is not None:
        with open(config, 'r') as fi:
            loaded = json.load(fi)
        unknown = set(loaded) - set(DEFAULTS) - {'N', 'r', 'networks', 'lookup', 'n_actors', 'fit', 'samples', 'trace', 'n_lr'}
        if unknown:
            raise ValueError(f"Unknown keys in config file '{config}': {sorted(unknown)}")
        params.update(loaded)
    params.update({k: v for k, v in vars(args).items() if k not in ['command', 'config', 'verbose', 'quiet']})
    return params


# ========== Sample files ==========
def samples_frame(records):
    '''One row per sample: iteration, G, beta, gamma, loglik, c1..cn (1-based), x{k}_{i}.'''
    n, d = records[0].X.shape
    labels = np.array([r.labels for r in records]) + 1
    X = np.array([r.X for r in records]).reshape(len(records), n*d)
    df = pd.DataFrame({'iteration': [r.iteration for r in records], 'G': [r.G for r in records],
        'beta': [r.beta for r in records], 'gamma': [r.gamma for r in records],
        'loglik': [r.log_likelihood for r in records]})
    cols = [f"c{i+1}" for i in range(n)] + [f"x{k+1}_{i+1}" for i in range(n) for k in range(d)]
    return pd.concat([df, pd.DataFrame(np.hstack([labels, X]), columns=cols)], axis=1).astype(
        {f"c{i+1}": int for i in range(n)})


def trace_frame(records):
    df = pd.DataFrame({'iteration': [r.iteration for r in records], 'G': [r.G for r in records],
        'beta': [r.beta for r in records], 'gamma': [r.gamma for r in records],
        'loglik': [r.log_likelihood for r in records]})
    accepted = np.array([r.accepted for r in records]).reshape(len(records), len(KERNELS))
    for k, kernel in enumerate(KERNELS):
        df[f"accepted_{kernel}"] = accepted[:,k]
    return df


def write_frame(df, fname, header):
    with open(fname, 'w') as fo:
        write_header(fo, header)
        df.to_csv(fo, index=False, float_format='%.17g')


def read_samples(fname):
    df = pd.read_csv(fname, comment='#')
    if len(df) == 0:
        raise EmptySampleError(f"No samples in '{fname}'")
    n = sum(c.startswith('c') and c[1:].isdigit() for c in df.columns)
    d = sum(c.startswith('x') and c.endswith('_1') for c in df.columns)
    labels = df[[f"c{i+1}" for i in range(n)]].values.astype(np.intp) - 1
    X = df[[f"x{k+1}_{i+1}" for i in range(n) for k in range(d)]].values.reshape(len(df), n, d)
    return [SampleRecord(int(row.iteration), int(row.G), float(row.beta), float(row.gamma), float(row.loglik),
        labels[k], X[k]) for k, row in enumerate(df.itertuples(index=False))]


def write_summary(summary, fname, header):
    out = {'provenance': {k: str(v) for k, v in header.items()}}
    out.update(summary.to_dict())
    with open(fname, 'w') as fo:
        json.dump(out, fo, indent=2, sort_keys=True, allow_nan=False)
        fo.write('\n')


# ========== Commands ==========
def cmd_fit(config):
    net = config.load_network()
    out = config['out']
    os.makedirs(out, exist_ok=True)
    repeats = int(config['repeats'])
    workers = worker_count(repeats)
    logger.info(f"Fitting {net.n} actors, {net.n_ties} ties: {repeats} run(s) on {workers} worker(s)")
    results = run_chains(net, config.hp, config.sc, repeats, workers, progress=logger.isEnabledFor(logging.INFO))
    seeds = chain_seeds(config.sc.seed, repeats)
    rows = []
    for k, (records, report) in enumerate(results):
        folder = out if repeats == 1 else path.join(out, f"run_{k+1:03d}")
        os.makedirs(folder, exist_ok=True)
        header = config.header('fit', run=k+1, chain_seed=seeds[k])
        if not records:
            raise EmptySampleError("No samples were recorded (iters < thin?)")
        write_frame(trace_frame(records), path.join(folder, 'trace.csv'), header)
        write_frame(samples_frame(records), path.join(folder, 'samples.csv'), header)
        summary = summarize(records, net, config.hp, report)
        write_summary(summary, path.join(folder, 'summary.json'), header)
        row = {'run': k+1, 'chain_seed': seeds[k]}
        row.update({f"p_G{g+1}": p for g, p in enumerate(summary.p_G)})
        rows.append(row)
        logger.info(f"Run {k+1}: modal G = {summary.modal_G}, p_G = {np.round(summary.p_G, 3).tolist()}")
    if repeats > 1:
        write_frame(pd.DataFrame(rows), path.join(out, 'p_G.csv'), config.header('fit', repeats=repeats))
    return 0


def cmd_summarize(config):
    net = config.load_network()
    records = read_samples(config['samples'])
    summary = summarize(records, net, config.hp)
    if config.params.get('trace') is not None:
        trace = pd.read_csv(config['trace'], comment='#')
        last = trace.iloc[-1]
        summary = replace(summary, acceptance={'accepted': {k: int(last[f"accepted_{k}"]) for k in KERNELS}})
    os.makedirs(config['out'], exist_ok=True)
    write_summary(summary, path.join(config['out'], 'summary.json'), config.header('summarize', samples=config['samples']))
    print(f"modal G = {summary.modal_G}; p_G = {np.round(summary.p_G, 3).tolist()}")
    return 0


def cmd_bic(config):
    net = config.load_network()
    records = read_samples(config['samples'])
    report = bic_report(net, records, config.hp, n_lr=config.params.get('n_lr', 'links'))
    os.makedirs(config['out'], exist_ok=True)
    write_frame(report.to_frame(), path.join(config['out'], 'bic.csv'),
        config.header('bic', samples=config['samples'], n_lr=report.n_lr, beta_hat=report.beta_hat))
    print(report.to_text())
    return 0


def cmd_calibrate(config):
    N = int(config.params.get('N', 10000))
    os.makedirs(config['out'], exist_ok=True)
    table = build_lookup(N, seed=config['seed'], workers=worker_count(os.cpu_count() or 1))
    write_lookup(table, path.join(config['out'], 'lookup.csv'),
        {'collapsed_lpcm': __version__, 'command': 'calibrate', 'N': N, 'seed': config['seed'], 'beta': 0.0})
    return 0


def cmd_simulate(config):
    r, networks = float(config['r']), int(config.params.get('networks', 100))
    lookup = config.params.get('lookup')
    table = read_lookup(lookup) if lookup is not None else build_lookup(int(config.params.get('N', 10000)), seed=config['seed'])
    scenario = scenario_for(table, r, int(config.params.get('n_actors', 50)))
    logger.info(f"Scenario r={r}: mu={scenario.mu:.4g}, tau={scenario.tau:.4g}")
    out = config['out']
    os.makedirs(out, exist_ok=True)
    header = {'collapsed_lpcm': __version__, 'command': 'simulate', 'r': r, 'mu': scenario.mu, 'tau': scenario.tau,
        'n_actors': scenario.n_actors, 'beta': 0.0, 'seed': config['seed'], 'lookup': lookup}
    # Same network seeds as run_study
    seeds = chain_seeds(config['seed'], 2*networks)[:networks]
    for k, seed in enumerate(seeds):
        net, labels, X = simulate_network(scenario, 0.0, np.random.default_rng(seed))
        h = dict(header, network=k+1, network_seed=seed)
        write_edge_list(net, path.join(out, f"network_{k+1:03d}.edges"), h)
        write_truth(path.join(out, f"network_{k+1:03d}.truth.csv"), labels, X, h)
    if config.params.get('fit'):
        df = run_study(scenario, networks, config.hp, config.sc, seed=config['seed'], workers=worker_count(networks))
        write_frame(df, path.join(out, 'study.csv'), config.header('simulate', r=r, mu=scenario.mu, tau=scenario.tau))
    return 0


COMMANDS = {
    'fit': cmd_fit,
    'summarize': cmd_summarize,
    'bic': cmd_bic,
    'calibrate': cmd_calibrate,
    'simulate': cmd_simulate,
}


def build_parser():
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False, argument_default=S)
    common.add_argument('-v', '--verbose', action='store_true', help='debug messages')
    common.add_argument('-q', '--quiet', action='store_true', help='warnings and errors only')
    common.add_argument('--config', help='JSON file of option values (overridden by flags)')
    common.add_argument('--seed', type=int, help=f"random seed (default {DEFAULTS['seed']})")
    common.add_argument('--out', help='output folder (default: current folder)')

    network = argparse.ArgumentParser(add_help=False, argument_default=S)
    network.add_argument('--input', help='edge list (1-based "i j" lines) or dense 0/1 adjacency .csv')
    network.add_argument('--dataset', help="bundled dataset name, e.g. 'karate'")
    network.add_argument('--directed', action='store_true', help='treat the network as directed')
    network.add_argument('--n', type=int, help='number of actors (default: largest index in the edge list)')

    model = argparse.ArgumentParser(add_help=False, argument_default=S)
    model.add_argument('--alpha', type=float, help='Dirichlet concentration (default 3)')
    model.add_argument('--delta', type=float, help='precision prior shape (default 2)')
    model.add_argument('--kappa', type=float, help='mean precision scale (default 0.1)')
    model.add_argument('--gamma-mean', dest='gamma_mean', type=float, help='prior mean of gamma (default 0.103)')
    model.add_argument('--gamma-sd', dest='gamma_sd', type=float, help='prior sd of gamma (default 0.103/4)')
    model.add_argument('--gmax', type=int, help='maximum number of components (default 10)')

    sampler = argparse.ArgumentParser(add_help=False, argument_default=S)
    sampler.add_argument('--iters', type=int, help='sweeps after burn-in (default 50000)')
    sampler.add_argument('--burnin', type=int, help='burn-in sweeps (default 10000)')
    sampler.add_argument('--thin', type=int, help='keep every thin-th sweep (default 10)')
    sampler.add_argument('--sigma-x', dest='sigma_x', type=float, help='position proposal s.d. (default sqrt(1.7))')
    sampler.add_argument('--sigma-beta', dest='sigma_beta', type=float, help='beta proposal s.d. (default sqrt(0.5))')
    sampler.add_argument('--no-adapt', dest='no_adapt', action='store_true', help='no proposal tuning during burn-in')
    sampler.add_argument('--repeats', type=int, help='independent runs (default 1)')

    parser = argparse.ArgumentParser(prog='collapsed-lpcm',
        description='Collapsed latent position cluster model sampler')
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest='command', required=True)
    sub.add_parser('fit', parents=[common, network, model, sampler], help='run the sampler')
    p = sub.add_parser('summarize', parents=[common, network, model], help='summary.json from a samples file')
    p.add_argument('--samples', required=True, help='samples.csv written by fit')
    p.add_argument('--trace', default=S, help='trace.csv written by fit')
    p = sub.add_parser('bic', parents=[common, network, model], help='approximate BIC table')
    p.add_argument('--samples', required=True, help='samples.csv written by fit')
    p.add_argument('--n-lr', dest='n_lr', choices=['links', 'dyads', 'actors'], default=S,
        help='effective sample size of the logistic part (default links)')
    p = sub.add_parser('calibrate', parents=[common], help='lookup table of the separation ratio')
    p.add_argument('--N', type=int, default=S, help='Monte-Carlo pairs per grid cell (default 10000)')
    p = sub.add_parser('simulate', parents=[common, model, sampler], help='two-cluster benchmark networks')
    p.add_argument('--r', type=float, required=True, help='target separation ratio')
    p.add_argument('--networks', type=int, default=S, help='number of networks (default 100)')
    p.add_argument('--lookup', default=S, help='lookup.csv from calibrate (default: build one)')
    p.add_argument('--N', type=int, default=S, help='Monte-Carlo pairs per cell when building the lookup')
    p.add_argument('--n-actors', dest='n_actors', type=int, default=S, help='actors per network (default 50)')
    p.add_argument('--fit', action='store_true', default=S, help='also fit every network and write study.csv')
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.DEBUG if vars(args).get('verbose') else logging.WARNING if vars(args).get('quiet') else logging.INFO
    logging.basicConfig(level=level, format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        config = RunConfig.from_params(resolve_params(args))
        return COMMANDS[args.command](config)
    except (ValueError, OSError) as err:
        logger.error(str(err))
        return 1


if __name__ == '__main__':
    sys.exit(main())
