"""Reinforcement learning of dynamical-decoupling pulse timings.

A DDQN agent deforms an initial pulse sequence with the generators of
Thompson's group F and is rewarded by the filter-function fidelity under a
classical dephasing noise spectrum.
"""
from __future__ import annotations

from .env import DecouplingEnv, EpisodeConfig, reward_fn
from .filterfn import PulseSequence, QuadratureConfig, chi, filter_function, filter_values, t2_star
from .harness import RunConfig, benchmark, train_one, trace_episode
from .qnet import AgentHyperparams, QNetwork, init_network
from .sequences import Family, SequenceFamily, make_sequence
from .spectra import Lorentzian, NoiseSpectrum, generate_spectrum, l2_norm
from .thompson import ActionId, PiecewiseLinearMap, compose_word, generator

__version__ = "0.1.0"

__all__ = [
    "DecouplingEnv",
    "EpisodeConfig",
    "reward_fn",
    "PulseSequence",
    "QuadratureConfig",
    "chi",
    "filter_function",
    "filter_values",
    "t2_star",
    "RunConfig",
    "benchmark",
    "train_one",
    "trace_episode",
    "AgentHyperparams",
    "QNetwork",
    "init_network",
    "Family",
    "SequenceFamily",
    "make_sequence",
    "Lorentzian",
    "NoiseSpectrum",
    "generate_spectrum",
    "l2_norm",
    "ActionId",
    "PiecewiseLinearMap",
    "compose_word",
    "generator",
]
