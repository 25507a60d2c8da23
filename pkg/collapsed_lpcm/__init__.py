#!/usr/bin/env python
# -*- coding: utf-8 -*-
from os import path
__version__ = open(path.join(path.dirname(__file__), '__version__')).read().strip()

from .netdata import Network, NetworkFormatError, dyads, load_edge_list, load_adjacency_csv, write_edge_list
from .core import (HyperParams, LatentConfig, Allocation, GroupStats, linear_predictor, log_likelihood,
    log_likelihood_actor, log_alloc_prior, log_component_marginal, log_g_prior, log_collapsed_target,
    link_probabilities)
from .sampler import SamplerConfig, SampleRecord, AcceptanceReport, ChainState, run_chain, run_chains
from .postprocess import (EmptySampleError, PosteriorSummary, choose_reference, procrustes_align,
    relabel_samples, summarize)
from .simstudy import Scenario, CalibrationTable, build_lookup, pick_params, simulate_network
from .bic import DegenerateBICError, BicReport, bic_lr, bic_mix, bic_report
