#!/usr/bin/env python
# -*- coding: utf-8 -*-
# Draw one simulated 50-actor network for each separation ratio preset,
# using a quick (N=2000) lookup table, and plot the true positions and ties.
#
#   python -m collapsed_lpcm.demos.separation_scenarios
import numpy as np
import matplotlib.pyplot as plt
from collapsed_lpcm.simstudy import SCENARIOS, build_lookup, scenario_for, simulate_network


table = build_lookup(N=2000, seed=0)
fig, axs = plt.subplots(2, 3, figsize=(12, 8))
for ax, r in zip(axs.ravel(), SCENARIOS):
    scenario = scenario_for(table, r)
    net, labels, X = simulate_network(scenario, 0.0, np.random.default_rng(1))
    for i, j in zip(*np.nonzero(np.tril(net.adjacency, k=-1))):
        ax.plot(X[[i,j],0], X[[i,j],1], color='lightgray', lw=0.3, zorder=0)
    ax.scatter(*X.T, c=labels, cmap='coolwarm', s=15)
    ax.set_title(f"r = {r} (mu = {scenario.mu:.2f}, tau = {scenario.tau:.0f}), {net.n_ties} ties")
    ax.set_aspect('equal')
plt.tight_layout()
plt.show()
