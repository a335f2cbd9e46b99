"""Deterministic pulse-timing MDP.

The state is the vector of pulse times. Each action rescales one of the five
Thompson-group maps to ``[0, T]`` and applies it to every pulse. The fidelity
is evaluated once, after the final step, and turned into a bounded reward.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .filterfn import PulseSequence, QuadratureConfig, chi_from_times
from .thompson import ActionId, generator, map_times


def reward_fn(p_initial: float, p_final: float) -> float:
    """Terminal reward, 1 at perfect fidelity and ``p/2`` when nothing changed."""
    if p_initial >= 1.0:
        raise ValueError("p_initial = 1 leaves nothing to improve; reward undefined")
    gap = 1.0 - p_initial
    return gap * p_final / (gap + (1.0 - p_final))


@dataclass
class EpisodeConfig:
    initial_sequence: PulseSequence
    spectrum: object
    max_steps: int = 32
    quad: QuadratureConfig = field(default_factory=QuadratureConfig)
    p_initial: float | None = None

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.p_initial is None:
            self.p_initial = self.fidelity(self.initial_sequence.as_array())
        if not 0.5 <= self.p_initial < 1.0:
            raise ValueError(f"p_initial must lie in [1/2, 1), got {self.p_initial}")

    @property
    def n_pulses(self) -> int:
        return self.initial_sequence.n_pulses

    @property
    def total_time(self) -> float:
        return self.initial_sequence.total_time

    def fidelity(self, times) -> float:
        return chi_from_times(
            times, self.initial_sequence.total_time, self.spectrum, self.quad, n_pulses=self.n_pulses
        ).p_avg


@dataclass
class Transition:
    state: np.ndarray
    action: ActionId
    reward: float
    next_state: np.ndarray
    terminal: bool
    p_final: float | None = None


class DecouplingEnv:
    """Single-agent, sequential environment.

    States are raw float arrays of pulse times. Round-off can, in principle,
    make two pulses coincide; the physics merges such pairs, while the state
    keeps its fixed length for the value network.
    """

    def __init__(self, config: EpisodeConfig):
        self.config = config
        self.n_fidelity_evals = 0
        self._times = config.initial_sequence.as_array()
        self._step = 0

    @property
    def step_index(self) -> int:
        return self._step

    @property
    def times(self) -> np.ndarray:
        return self._times.copy()

    def observe(self, times=None) -> np.ndarray:
        t = self._times if times is None else times
        return t / self.config.total_time

    def reset(self) -> np.ndarray:
        self._times = self.config.initial_sequence.as_array()
        self._step = 0
        return self._times.copy()

    def evaluate(self, times) -> float:
        self.n_fidelity_evals += 1
        return self.config.fidelity(times)

    def step(self, action: ActionId) -> Transition:
        if self._step >= self.config.max_steps:
            raise RuntimeError("episode is over; call reset()")
        state = self._times
        nxt = map_times(generator(action), state, self.config.total_time)
        self._step += 1
        terminal = self._step == self.config.max_steps
        reward = 0.0
        p_final = None
        if terminal:
            p_final = self.evaluate(nxt)
            reward = reward_fn(self.config.p_initial, p_final)
        self._times = nxt
        return Transition(state, ActionId(action), reward, nxt, terminal, p_final)
