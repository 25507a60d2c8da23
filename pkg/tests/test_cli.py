import json
import os
from os import path
import numpy as np
import pandas as pd
import pytest
from collapsed_lpcm.cli import (ENV_THREADS, derive_gamma_hyperprior, worker_count, build_parser, resolve_params,
    RunConfig, read_samples, main)
from collapsed_lpcm.netdata import load_edge_list

TINY = ['--iters', '20', '--burnin', '10', '--thin', '2']


@pytest.fixture
def single_worker(monkeypatch):
    monkeypatch.setenv(ENV_THREADS, '1')


@pytest.fixture
def karate_run(tmp_path, single_worker):
    out = tmp_path / 'karate'
    assert main(['fit', '--dataset', 'karate', '--seed', '3', '--out', str(out)] + TINY) == 0
    return out


def test_derive_gamma_hyperprior(rng):
    s, r = derive_gamma_hyperprior(0.103, 0.103/4)
    assert s == pytest.approx(32)
    assert r == pytest.approx(310.68, abs=0.01)
    assert derive_gamma_hyperprior(2, 2) == pytest.approx((2, 1))
    draws = rng.gamma(s/2, 2/r, size=200000)
    assert draws.mean() == pytest.approx(0.103, rel=0.01)
    assert draws.std() == pytest.approx(0.103/4, rel=0.02)
    with pytest.raises(ValueError):
        derive_gamma_hyperprior(0, 1)


def test_worker_count(monkeypatch):
    monkeypatch.setenv(ENV_THREADS, '3')
    assert worker_count(10) == 3
    assert worker_count(2) == 2
    monkeypatch.setenv(ENV_THREADS, 'many')
    with pytest.raises(ValueError):
        worker_count(2)


def test_config_precedence(tmp_path):
    fname = tmp_path / 'run.json'
    fname.write_text(json.dumps({'iters': 7, 'burnin': 3, 'seed': 5, 'alpha': 1.5}))
    args = build_parser().parse_args(['fit', '--dataset', 'karate', '--config', str(fname), '--iters', '4'])
    params = resolve_params(args)
    assert params['iters'] == 4
    assert params['burnin'] == 3 and params['seed'] == 5
    assert params['thin'] == 10
    config = RunConfig.from_params(params)
    assert config.hp.alpha == 1.5 and config.hp.kappa == 0.1
    assert config.sc.iters == 4 and config.sc.seed == 5
    fname.write_text(json.dumps({'iterations': 7}))
    with pytest.raises(ValueError):
        resolve_params(build_parser().parse_args(['fit', '--config', str(fname)]))


def test_fit_outputs(karate_run):
    for fname in ['samples.csv', 'trace.csv', 'summary.json']:
        assert path.exists(karate_run / fname)
    samples = pd.read_csv(karate_run / 'samples.csv', comment='#')
    assert len(samples) == 10
    assert samples['iteration'].tolist() == list(range(12, 31, 2))
    assert {'c1', 'c34', 'x1_1', 'x2_34'} <= set(samples.columns)
    assert samples[[f"c{i}" for i in range(1, 35)]].values.min() >= 1
    trace = pd.read_csv(karate_run / 'trace.csv', comment='#')
    assert 'accepted_eject' in trace.columns
    assert np.all(np.diff(trace['accepted_beta']) >= 0)
    def strict(token):
        raise ValueError(f"non-standard JSON constant {token}")

    with open(karate_run / 'summary.json') as fi:
        summary = json.load(fi, parse_constant=strict)
    assert summary['n_samples'] == 10
    assert sum(summary['p_G']) == pytest.approx(1)
    assert summary['provenance']['seed'] == '3'
    with open(karate_run / 'samples.csv') as fi:
        assert fi.readline().startswith('# collapsed_lpcm: ')


def test_fit_reproducible(karate_run, tmp_path):
    again = tmp_path / 'again'
    assert main(['fit', '--dataset', 'karate', '--seed', '3', '--out', str(again)] + TINY) == 0
    for fname in ['samples.csv', 'trace.csv', 'summary.json']:
        assert (karate_run / fname).read_bytes() == (again / fname).read_bytes()


def test_read_samples(karate_run):
    records = read_samples(karate_run / 'samples.csv')
    df = pd.read_csv(karate_run / 'samples.csv', comment='#')
    assert len(records) == 10
    assert records[0].X.shape == (34, 2)
    assert records[0].labels.min() >= 0
    assert records[-1].X[33, 1] == df['x2_34'].iloc[-1]


def test_summarize_and_bic(karate_run, tmp_path, capsys):
    out = tmp_path / 'post'
    assert main(['summarize', '--dataset', 'karate', '--samples', str(karate_run / 'samples.csv'),
        '--trace', str(karate_run / 'trace.csv'), '--out', str(out)]) == 0
    with open(out / 'summary.json') as fi:
        summary = json.load(fi)
    assert 'accepted' in summary['acceptance']
    assert 'modal G' in capsys.readouterr().out
    assert main(['bic', '--dataset', 'karate', '--samples', str(karate_run / 'samples.csv'), '--out', str(out)]) == 0
    bic = pd.read_csv(out / 'bic.csv', comment='#')
    assert bic['G'].tolist() == list(range(1, 11))
    assert '*' in capsys.readouterr().out


def test_summarize_empty_samples(tmp_path):
    fname = tmp_path / 'samples.csv'
    fname.write_text('# nothing\niteration,G,beta,gamma,loglik,c1\n')
    assert main(['summarize', '--dataset', 'karate', '--samples', str(fname), '--out', str(tmp_path)]) == 1


def test_repeats(tmp_path, single_worker):
    out = tmp_path / 'rep'
    assert main(['fit', '--dataset', 'karate', '--repeats', '2', '--out', str(out)] + TINY) == 0
    assert path.exists(out / 'run_001' / 'samples.csv') and path.exists(out / 'run_002' / 'samples.csv')
    p_G = pd.read_csv(out / 'p_G.csv', comment='#')
    assert p_G['run'].tolist() == [1, 2]
    np.testing.assert_allclose(p_G[[f"p_G{g}" for g in range(1, 11)]].sum(axis=1), 1)


def test_calibrate(tmp_path, single_worker):
    assert main(['calibrate', '--N', '1000', '--out', str(tmp_path)]) == 0
    table = pd.read_csv(tmp_path / 'lookup.csv', comment='#')
    assert len(table) == 400
    assert list(table.columns) == ['mu', 'tau', 'r_hat', 'N', 'seed']


def test_simulate(tmp_path, single_worker):
    out = tmp_path / 'sim'
    assert main(['simulate', '--r', '5', '--networks', '3', '--N', '1000', '--out', str(out)]) == 0
    for k in range(1, 4):
        net = load_edge_list(out / f"network_{k:03d}.edges", 50)
        truth = pd.read_csv(out / f"network_{k:03d}.truth.csv", comment='#')
        assert net.n == 50 and len(truth) == 50
        assert set(truth['true_label']) <= {1, 2}
    assert not path.exists(out / 'study.csv')


def test_bad_input(tmp_path):
    assert main(['fit', '--input', str(tmp_path / 'missing.edges'), '--out', str(tmp_path)] + TINY) == 1
    assert main(['fit', '--out', str(tmp_path)] + TINY) == 1
    bad = tmp_path / 'bad.edges'
    bad.write_text('1 1\n')
    assert main(['fit', '--input', str(bad), '--out', str(tmp_path)] + TINY) == 1
    assert main(['fit', '--dataset', 'karate', '--thin', '0', '--out', str(tmp_path)]) == 1
