#!/usr/bin/env python
# -*- coding: utf-8 -*-
# Fit the karate club network and plot the posterior of G, the aligned mean
# positions (pie charts of membership probabilities) and the trace of G.
# A shorter schedule than the default keeps the demo under a minute or two;
# pass the number of post burn-in sweeps as the first argument to change it.
#
#   python -m collapsed_lpcm.demos.karate_clusters 50000
import sys
import logging
import numpy as np
import matplotlib.pyplot as plt
from matplotlib.patches import Wedge
from collapsed_lpcm import HyperParams, SamplerConfig, run_chain, summarize
from collapsed_lpcm.data import load_karate, karate_factions


logging.basicConfig(level=logging.INFO)
iters = int(sys.argv[1]) if len(sys.argv) > 1 else 10000
net = load_karate()
hp = HyperParams()
records, report = run_chain(net, hp, SamplerConfig(seed=1, burnin=iters//5, iters=iters, thin=10), progress=True)
summary = summarize(records, net, hp, report)
print(f"p(G) = {np.round(summary.p_G, 3)}")
print(f"actor 9 membership = {np.round(summary.membership[8], 3)}")

fig, axs = plt.subplots(1, 3, figsize=(15, 5))
# Posterior of G
axs[0].bar(np.arange(1, hp.g_max+1), summary.p_G, color='gray')
axs[0].set_xlabel('G')
axs[0].set_ylabel('posterior probability')
# Mean positions with ties and membership pies
X = summary.mean_positions
ax = axs[1]
for i, j in zip(*np.nonzero(np.tril(net.adjacency, k=-1))):
    ax.plot(X[[i,j],0], X[[i,j],1], color='lightgray', lw=0.5, zorder=0)
colors = plt.cm.tab10(np.arange(summary.modal_G))
radius = 0.04*np.ptp(X)
for i, (x, p) in enumerate(zip(X, summary.membership)):
    wedges = np.cumsum(np.r_[0, p])*360
    for g in range(summary.modal_G):
        if p[g] > 0:
            ax.add_patch(Wedge(x, radius, wedges[g], wedges[g+1], color=colors[g]))
    ax.text(*x, str(i+1), fontsize=7, ha='center', va='center')
faction = karate_factions()
ax.scatter(*X.T, s=300, facecolors='none', edgecolors=np.where(faction, 'k', 'r'), lw=0.5)
ax.set_aspect('equal')
ax.autoscale()
ax.set_title(f"modal G = {summary.modal_G}")
# Trace of G
axs[2].plot([r.iteration for r in records], [r.G for r in records], lw=0.5)
axs[2].set_xlabel('sweep')
axs[2].set_ylabel('G')
plt.tight_layout()
plt.show()
