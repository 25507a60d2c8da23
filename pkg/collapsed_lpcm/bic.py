#!/usr/bin/env python
# -*- coding: utf-8 -*-
# Approximate BIC for the number of clusters, conditional on one plug-in
# estimate of the latent positions:
#   BIC(G) = BIC_LR (logistic regression of the dyads on distances)
#          + BIC_MIX(G) (spherical Gaussian mixture fitted to the positions)
# The plug-in here is the aligned posterior mean of a collapsed run, not
# the minimum Kullback-Leibler positions, so values differ from latentnet.
import logging
import warnings
from dataclasses import dataclass
import numpy as np
import pandas as pd
from scipy.optimize import brentq
from scipy.special import expit
from sklearn.mixture import GaussianMixture
from .core import LatentConfig, log_likelihood
from .netdata import dyad_indices
from .postprocess import mean_positions

logger = logging.getLogger(__name__)

N_LR_CHOICES = ('links', 'dyads', 'actors')
PRECISION_CAP = 1e6


class DegenerateBICError(ValueError):
    pass


def fit_beta(net, X_hat, bound=50.0):
    '''
    Maximum-likelihood beta given fixed positions.

    The score sum(y) - sum(expit(beta - d)) is decreasing in beta, so its root
    is bracketed on [-bound, bound]. If the root lies outside (complete
    separation, e.g. every dyad tied) beta is capped at the bound.

    Returns
    -------
    beta_hat : float
    separable : bool
    '''
    I, J = dyad_indices(net)
    X_hat = np.asarray(X_hat, dtype=np.float64)
    dist = np.linalg.norm(X_hat[I] - X_hat[J], axis=1)
    y = net.adjacency[I, J].sum()
    score = lambda beta: y - np.sum(expit(beta - dist))
    if score(bound) >= 0:
        return bound, True
    if score(-bound) <= 0:
        return -bound, True
    return brentq(score, -bound, bound, xtol=1e-12, rtol=1e-15), False


def effective_size(net, n_lr='links'):
    if n_lr not in N_LR_CHOICES:
        raise ValueError(f"Unknown n_lr '{n_lr}', choose from {N_LR_CHOICES}")
    return {'links': net.n_ties, 'dyads': net.n_dyads, 'actors': net.n}[n_lr]


def fit_lr(net, X_hat, n_lr='links', bound=50.0):
    '''
    BIC_LR together with the fitted beta.

    Returns
    -------
    bic : float
    beta_hat : float
    separable : bool
    '''
    size = effective_size(net, n_lr)
    if size == 0:
        raise DegenerateBICError(f"BIC_LR is undefined with n_LR = 0 ({n_lr})")
    beta_hat, separable = fit_beta(net, X_hat, bound)
    if separable:
        warnings.warn(f"Logistic fit is separable; beta capped at {beta_hat:g}")
    return -2*log_likelihood(net, LatentConfig(X_hat, beta_hat)) + np.log(size), beta_hat, separable


def bic_lr(net, X_hat, n_lr='links', bound=50.0):
    '''
    -2 log p(Y | X_hat, beta_hat) + log(n_LR), one free parameter (beta).

    Parameters
    ----------
    n_lr : {'links', 'dyads', 'actors'}
        Effective sample size: number of ties (default), dyads or actors.
    '''
    return fit_lr(net, X_hat, n_lr, bound)[0]


def n_mix_params(G, d):
    '''Weights, means and precisions of a spherical mixture.'''
    return (G-1) + G*d + G


def mixture_loglik(X, G, seed=0):
    '''
    Maximized log-likelihood of a G-component spherical Gaussian mixture.

    G=1 is the closed form (sample mean, pooled variance). Otherwise EM with
    20 k-means initialized restarts; variances are floored at 1/PRECISION_CAP.
    '''
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    if G > n:
        raise ValueError(f"Cannot fit {G} components to {n} points")
    if G == 1:
        sse = np.sum((X - X.mean(axis=0))**2)
        var = sse / (n*d)
        if var < 1/PRECISION_CAP:
            warnings.warn(f"Degenerate positions; precision capped at {PRECISION_CAP:g}")
            var = 1/PRECISION_CAP
        return -n*d/2*np.log(2*np.pi*var) - sse/(2*var)
    gm = GaussianMixture(n_components=G, covariance_type='spherical', n_init=20, tol=1e-8,
        reg_covar=1/PRECISION_CAP, max_iter=1000, random_state=seed).fit(X)
    if not gm.converged_:
        warnings.warn(f"EM did not converge for G={G}")
    if np.any(gm.covariances_ <= 1.001/PRECISION_CAP):
        warnings.warn(f"A mixture component collapsed for G={G}; precision capped at {PRECISION_CAP:g}")
    return gm.score(X)*n


def bic_mix(X_hat, G, seed=0):
    '''
    -2 log pi(X_hat | theta_hat) + d_MIX log(n), with n the number of actors.
    '''
    if G < 1:
        raise ValueError(f"G must be >= 1, got {G}")
    X_hat = np.asarray(X_hat, dtype=np.float64)
    n, d = X_hat.shape
    return -2*mixture_loglik(X_hat, G, seed) + n_mix_params(G, d)*np.log(n)


@dataclass(frozen=True, eq=False)
class BicReport(object):
    G: np.ndarray
    bic_lr: float
    bic_mix: np.ndarray
    total: np.ndarray
    chosen_G: int
    n_lr: int
    n: int
    beta_hat: float
    separable: bool

    def to_frame(self):
        return pd.DataFrame({'G': self.G, 'bic_lr': self.bic_lr, 'bic_mix': self.bic_mix, 'total': self.total})

    def to_text(self):
        df = self.to_frame()
        df['best'] = np.where(df['G'] == self.chosen_G, '*', '')
        lines = [
            "Approximate BIC (plug-in: aligned posterior mean positions)",
            f"n_LR = {self.n_lr}, n = {self.n}, beta_hat = {self.beta_hat:.4f}" + (" (separable)" if self.separable else ""),
            df.to_string(index=False, float_format=lambda v: f"{v:.2f}"),
        ]
        return '\n'.join(lines)


def bic_report(net, samples, hp, G_max=None, n_lr='links', seed=0):
    '''
    BIC table over G = 1..G_max at X_hat = aligned posterior mean positions.
    G values with more components than actors get an infinite BIC_MIX.
    '''
    G_max = hp.g_max if G_max is None else G_max
    X_hat = mean_positions(samples)
    lr, beta_hat, separable = fit_lr(net, X_hat, n_lr)
    Gs = np.arange(1, G_max+1)
    mix = np.array([bic_mix(X_hat, G, seed) if G <= net.n else np.inf for G in Gs])
    total = lr + mix
    chosen = int(Gs[np.argmin(total)])
    logger.info(f"BIC chooses G={chosen} (total {total.min():.2f})")
    return BicReport(Gs, lr, mix, total, chosen, effective_size(net, n_lr), net.n, beta_hat, separable)
