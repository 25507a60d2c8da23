#!/usr/bin/env python
# -*- coding: utf-8 -*-
# Binary networks and their dyad sets.
# Actor indices in files are 1-based; everything in memory is 0-based.
import re
import warnings
from dataclasses import dataclass, field
import numpy as np
import networkx as nx


class NetworkFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Network(object):
    '''
    An observed binary network (immutable).

    Parameters
    ----------
    adjacency : array of shape (n,n)
        y_ij in {0,1}, zero diagonal, symmetric if undirected.
    directed : bool
        Declared by the caller. Symmetric data can still be directed.
    '''
    adjacency: np.ndarray
    directed: bool = False
    n: int = field(init=False)

    def __post_init__(self):
        raw = np.asarray(self.adjacency)
        if raw.ndim != 2 or raw.shape[0] != raw.shape[1]:
            raise ValueError(f"Adjacency must be a square matrix, got shape {raw.shape}")
        if raw.shape[0] < 2:
            raise ValueError(f"A network needs at least 2 actors, got {raw.shape[0]}")
        # Checked before the cast, which would truncate 0.7 or wrap 257
        if not np.isin(raw, [0, 1]).all():
            raise ValueError("Adjacency entries must be 0 or 1 (weighted graphs are not supported)")
        Y = raw.astype(np.int8)
        if np.any(np.diag(Y)):
            raise ValueError("Self ties are not allowed (diagonal must be zero)")
        if not self.directed and not np.array_equal(Y, Y.T):
            raise ValueError("Undirected network requires a symmetric adjacency")
        Y.flags.writeable = False
        object.__setattr__(self, 'adjacency', Y)
        object.__setattr__(self, 'directed', bool(self.directed))
        object.__setattr__(self, 'n', Y.shape[0])

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return self.directed == other.directed and np.array_equal(self.adjacency, other.adjacency)

    __hash__ = None

    @property
    def n_dyads(self):
        return self.n*(self.n-1) if self.directed else self.n*(self.n-1)//2

    @property
    def n_ties(self):
        '''
        Number of ties (each undirected tie counted once).
        '''
        if self.directed:
            return int(self.adjacency.sum())
        return int(np.triu(self.adjacency, k=1).sum())

    def dyad_values(self):
        '''
        y_ij for the dyads in the order of `dyads(net)`.
        '''
        I, J = dyad_indices(self)
        return self.adjacency[I, J].astype(np.float64)

    def to_graph(self):
        G = nx.DiGraph() if self.directed else nx.Graph()
        G.add_nodes_from(range(self.n))
        G.add_edges_from(zip(*np.nonzero(self.adjacency)))
        return G

    @classmethod
    def from_graph(cls, graph, directed=None):
        '''
        Build a Network from a networkx graph. Nodes are relabelled 0..n-1 in
        sorted order; edge weights are ignored.
        '''
        if directed is None:
            directed = graph.is_directed()
        nodes = sorted(graph.nodes())
        A = nx.to_numpy_array(graph, nodelist=nodes, weight=None, dtype=np.int8)
        A[A > 0] = 1
        if not directed:
            A = np.maximum(A, A.T)
        return cls(A, directed=directed)


def dyad_indices(net):
    '''
    Row and column indices (0-based) of the dyad set.

    Undirected: all pairs with j < i, ordered by i then j, i.e., the lower
    triangle (2,1), (3,1), (3,2), ... in 1-based terms.
    Directed: all ordered pairs i != j, row-major.
    '''
    n = net.n
    if net.directed:
        I, J = np.nonzero(~np.eye(n, dtype=bool))
    else:
        I, J = np.tril_indices(n, k=-1)
    return I, J


def dyads(net):
    '''
    The dyad set as a list of 1-based actor pairs (i,j).

    Returns
    -------
    pairs : list of (int, int)
        n(n-1)/2 pairs with j<i if undirected, n(n-1) ordered pairs if directed.
    '''
    I, J = dyad_indices(net)
    return [(int(i)+1, int(j)+1) for i, j in zip(I, J)]


def load_edge_list(path, n=None, directed=False):
    '''
    Load a network from a whitespace/comma separated edge list.

    Each non-empty line holds "i j" with 1-based actor indices in 1..n.
    Lines starting with '#' are comments. A third column (edge weight) is an
    error: the model is binary. Duplicate edges are warned about and ignored.

    Parameters
    ----------
    path : str
    n : int
        Number of actors (isolated actors do not appear in the file). If None,
        the largest index in the file.
    directed : bool

    Returns
    -------
    net : Network
    '''
    with open(path, 'r') as fi:
        lines = [(lineno, line.strip()) for lineno, line in enumerate(fi, start=1)]
    lines = [(lineno, line) for lineno, line in lines if line and not line.startswith('#')]
    if n is None:
        indices = [t for _, line in lines for t in re.split(r'[\s,]+', line)[:2]]
        n = max([int(t) for t in indices if t.isdigit()] + [2])
    if n < 2:
        raise ValueError(f"A network needs at least 2 actors, got n={n}")
    A = np.zeros((n, n), dtype=np.int8)
    for lineno, line in lines:
        tokens = [t for t in re.split(r'[\s,]+', line) if t]
        if len(tokens) != 2:
            raise NetworkFormatError(f"{path}:{lineno}: expected 'i j', got {line!r} (weights are not supported)")
        try:
            i, j = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise NetworkFormatError(f"{path}:{lineno}: non-integer actor index in {line!r}")
        if not (1 <= i <= n and 1 <= j <= n):
            raise NetworkFormatError(f"{path}:{lineno}: actor index out of range 1..{n} in {line!r}")
        if i == j:
            raise NetworkFormatError(f"{path}:{lineno}: self loop ({i},{j}) is not allowed")
        if A[i-1, j-1]:
            warnings.warn(f"{path}:{lineno}: duplicate edge ({i},{j}) ignored")
        A[i-1, j-1] = 1
        if not directed:
            A[j-1, i-1] = 1
    return Network(A, directed=directed)


def write_edge_list(net, path, header=None):
    '''
    Write a network as a 1-based edge list (each undirected tie once, as i>j).

    Parameters
    ----------
    header : dict
        Optional provenance lines written as "# key: value".
    '''
    if net.directed:
        I, J = np.nonzero(net.adjacency)
    else:
        I, J = np.nonzero(np.tril(net.adjacency, k=-1))
    with open(path, 'w') as fo:
        for key, value in (header or {}).items():
            fo.write(f"# {key}: {value}\n")
        for i, j in zip(I, J):
            fo.write(f"{i+1} {j+1}\n")


def load_adjacency_csv(path, directed=False):
    '''
    Load a dense adjacency matrix: n rows of n comma separated 0/1 values.
    '''
    A = np.loadtxt(path, delimiter=',', dtype=np.float64, comments='#', ndmin=2)
    if not np.isin(A, [0, 1]).all():
        raise NetworkFormatError(f"{path}: adjacency entries must be 0 or 1")
    try:
        return Network(A.astype(np.int8), directed=directed)
    except ValueError as err:
        raise NetworkFormatError(f"{path}: {err}")
