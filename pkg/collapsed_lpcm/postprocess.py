#!/usr/bin/env python
# -*- coding: utf-8 -*-
# Posterior summaries from recorded samples.
# The likelihood only depends on distances, so positions are Procrustes
# matched to a reference sample before averaging; the collapsed posterior is
# invariant to relabelling, so labels are matched by square assignment.
import logging
from dataclasses import dataclass
import numpy as np
from scipy.linalg import orthogonal_procrustes
from scipy.optimize import linear_sum_assignment
from .core import LatentConfig, link_probabilities

logger = logging.getLogger(__name__)


class EmptySampleError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class AlignedSample(object):
    X_aligned: np.ndarray
    labels: np.ndarray
    permutation: np.ndarray # permutation[old label] = new label


@dataclass(frozen=True, eq=False)
class PosteriorSummary(object):
    '''
    Parameters
    ----------
    p_G : array of shape (g_max,)
        Posterior probabilities of G = 1..g_max.
    modal_G : int
    mean_positions : array of shape (n,d)
        Procrustes aligned posterior mean of X over the samples with modal G.
    membership : array of shape (n,modal_G)
        Posterior allocation probabilities after relabelling.
    coclustering : array of shape (n,n)
        P(c_i = c_j) over all samples.
    link_probs : array of shape (n,n)
        Link probabilities at the mean positions and mean beta.
    '''
    p_G: np.ndarray
    modal_G: int
    mean_positions: np.ndarray
    membership: np.ndarray
    coclustering: np.ndarray
    link_probs: np.ndarray
    beta_mean: float
    beta_sd: float
    gamma_mean: float
    gamma_sd: float
    n_samples: int
    acceptance: dict = None

    def to_dict(self):
        return {
            'n_samples': self.n_samples,
            'p_G': self.p_G.tolist(),
            'modal_G': self.modal_G,
            'mean_positions': self.mean_positions.tolist(),
            'membership': self.membership.tolist(),
            'beta': {'mean': self.beta_mean, 'sd': self.beta_sd},
            'gamma': {'mean': self.gamma_mean, 'sd': self.gamma_sd},
            'acceptance': self.acceptance,
        }


def _check_samples(samples):
    if len(samples) == 0:
        raise EmptySampleError("No samples to post-process")


def choose_reference(samples):
    '''
    Index of the sample with the highest log-likelihood (earliest iteration
    among ties).
    '''
    _check_samples(samples)
    return min(range(len(samples)), key=lambda k: (-samples[k].log_likelihood, samples[k].iteration))


def procrustes_align(X, X_ref):
    '''
    Rotate/reflect and translate X to best match X_ref in Frobenius norm.

    Both are centred, the orthogonal part is solved by SVD, and the result is
    moved to the centroid of X_ref. A configuration with all rows identical
    is only translated.
    '''
    X = np.asarray(X, dtype=np.float64)
    X_ref = np.asarray(X_ref, dtype=np.float64)
    if X.shape != X_ref.shape:
        raise ValueError(f"Shape mismatch: {X.shape} vs reference {X_ref.shape}")
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError(f"Need at least 2 rows of positions, got shape {X.shape}")
    A = X - X.mean(axis=0)
    B = X_ref - X_ref.mean(axis=0)
    if np.allclose(A, 0) or np.allclose(B, 0):
        return A + X_ref.mean(axis=0)
    R, _ = orthogonal_procrustes(A, B)
    return A @ R + X_ref.mean(axis=0)


def membership_matrix(labels, G):
    '''
    Relative frequency of each label per actor.

    Parameters
    ----------
    labels : array of shape (S,n)
        One 0-based label vector per sample.

    Returns
    -------
    P : array of shape (n,G)
    '''
    labels = np.atleast_2d(labels)
    S, n = labels.shape
    P = np.zeros((n, G))
    np.add.at(P, (np.tile(np.arange(n), S), labels.ravel()), 1.0)
    return P / S


def coclustering_matrix(labels):
    '''P(c_i = c_j) estimated over the rows of `labels`.'''
    labels = np.atleast_2d(labels)
    return np.mean(labels[:,:,np.newaxis] == labels[:,np.newaxis,:], axis=0)


def _assignment_cost(labels, ref, G):
    # cost[g,h] = #{i: labels_i = g and ref_i != h}
    agree = np.zeros((G, G))
    np.add.at(agree, (labels, ref), 1.0)
    return np.bincount(labels, minlength=G)[:,np.newaxis] - agree


def relabel_samples(samples, modal_G, X_ref=None, max_iter=100):
    '''
    Undo label switching among samples that all have G = modal_G.

    Starting from the labels of the first sample as reference, each sample is
    given the label permutation minimizing its disagreements with the
    reference (solved exactly by linear_sum_assignment). The reference is then
    replaced by the per-actor modal label of the relabelled samples, until the
    total cost stops decreasing.

    Parameters
    ----------
    X_ref : array of shape (n,d)
        Procrustes reference. Defaults to the highest likelihood sample.

    Returns
    -------
    aligned : list of AlignedSample
    '''
    _check_samples(samples)
    if any(s.G != modal_G for s in samples):
        raise ValueError(f"All samples must have G={modal_G}")
    if X_ref is None:
        X_ref = samples[choose_reference(samples)].X
    labels = np.array([s.labels for s in samples])
    ref = labels[0].copy()
    best_cost, best_perms = np.inf, None
    for it in range(max_iter):
        perms = np.empty((len(samples), modal_G), dtype=np.intp)
        cost = 0.0
        for k in range(len(samples)):
            C = _assignment_cost(labels[k], ref, modal_G)
            rows, cols = linear_sum_assignment(C)
            perms[k, rows] = cols
            cost += C[rows, cols].sum()
        logger.debug(f"Relabelling iteration {it}: total cost {cost:g}")
        if cost >= best_cost:
            break
        best_cost, best_perms = cost, perms
        relabelled = np.take_along_axis(perms, labels, axis=1)
        ref = np.argmax(membership_matrix(relabelled, modal_G), axis=1)
    return [AlignedSample(procrustes_align(s.X, X_ref), best_perms[k][s.labels], best_perms[k])
        for k, s in enumerate(samples)]


def mean_positions(samples, X_ref=None):
    '''
    Posterior mean of the Procrustes aligned positions.
    '''
    _check_samples(samples)
    if X_ref is None:
        X_ref = samples[choose_reference(samples)].X
    return np.mean([procrustes_align(s.X, X_ref) for s in samples], axis=0)


def summarize(samples, net, hp, acceptance=None):
    '''
    Summarize a chain (or pooled chains).

    p_G uses all samples; positions and memberships use the samples at the
    modal G only. The Procrustes reference is the highest likelihood sample
    over all samples.

    Parameters
    ----------
    samples : list of SampleRecord
    net : Network
    hp : HyperParams
    acceptance : AcceptanceReport

    Returns
    -------
    summary : PosteriorSummary
    '''
    _check_samples(samples)
    Gs = np.array([s.G for s in samples])
    if Gs.max() > hp.g_max:
        raise ValueError(f"Sample with G={Gs.max()} exceeds g_max={hp.g_max}")
    if samples[0].X.shape[0] != net.n:
        raise ValueError(f"Samples have {samples[0].X.shape[0]} actors but the network has {net.n}")
    p_G = np.bincount(Gs-1, minlength=hp.g_max) / len(samples)
    modal_G = int(np.argmax(p_G)) + 1
    X_ref = samples[choose_reference(samples)].X
    modal = [s for s in samples if s.G == modal_G]
    aligned = relabel_samples(modal, modal_G, X_ref)
    X_mean = np.mean([a.X_aligned for a in aligned], axis=0)
    betas = np.array([s.beta for s in samples])
    gammas = np.array([s.gamma for s in samples])
    return PosteriorSummary(
        p_G=p_G,
        modal_G=modal_G,
        mean_positions=X_mean,
        membership=membership_matrix(np.array([a.labels for a in aligned]), modal_G),
        coclustering=coclustering_matrix(np.array([s.labels for s in samples])),
        link_probs=link_probabilities(LatentConfig(X_mean, betas.mean())),
        beta_mean=float(betas.mean()), beta_sd=float(betas.std()),
        gamma_mean=float(gammas.mean()), gamma_sd=float(gammas.std()),
        n_samples=len(samples),
        acceptance=None if acceptance is None else acceptance.to_dict(),
    )
