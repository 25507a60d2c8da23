#!/usr/bin/env python
# -*- coding: utf-8 -*-
from os import path
import numpy as np
import networkx as nx
from ..netdata import Network, load_edge_list

data_path = path.realpath(path.dirname(__file__))

# name: (file, number of actors, directed)
DATASETS = {
    'monks': ('monks.edges', 18, True),
    'dolphins': ('dolphins.edges', 62, False),
}


def load_karate():
    '''
    Zachary's karate club: 34 actors, 78 undirected ties (from networkx).
    '''
    return Network.from_graph(nx.karate_club_graph(), directed=False)


def karate_factions():
    '''
    0 for the instructor's ("Mr. Hi") faction, 1 for the officer's.
    '''
    graph = nx.karate_club_graph()
    return np.array([int(graph.nodes[v]['club'] != 'Mr. Hi') for v in sorted(graph.nodes())])


def load_dataset(name):
    '''
    Load a named network: 'karate', or an edge list placed in `data_path`
    (see README.md there).
    '''
    if name == 'karate':
        return load_karate()
    if name not in DATASETS:
        raise ValueError(f"Unknown dataset '{name}', choose from {['karate'] + list(DATASETS)}")
    fname, n, directed = DATASETS[name]
    fpath = path.join(data_path, fname)
    if not path.exists(fpath):
        raise FileNotFoundError(f"Edge list '{fpath}' not found; see {path.join(data_path, 'README.md')}")
    return load_edge_list(fpath, n, directed)
