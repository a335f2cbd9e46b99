"""Dephasing physics for ideal, instantaneous pi pulses.

A pulse sequence defines a piecewise-constant switching function on
``[0, T]``. Its squared Fourier magnitude (the filter function) overlapped
with the noise spectrum gives the attenuation ``chi`` and the ensemble
fidelity ``p_avg = (1 + exp(-chi)) / 2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .quadrature import QuadratureError, adaptive_simpson

__all__ = [
    "PulseSequence",
    "FilterEvaluation",
    "AttenuationResult",
    "QuadratureConfig",
    "QuadratureError",
    "switching_value",
    "filter_function",
    "filter_values",
    "merge_coincident",
    "chi",
    "chi_from_times",
    "p_avg_from_chi",
    "t2_star",
    "fid_filter",
]


@dataclass(frozen=True)
class PulseSequence:
    """Pulse instants strictly inside ``(0, total_time)``, strictly increasing."""

    times: tuple[float, ...]
    total_time: float = 1.0

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "total_time", float(self.total_time))
        if not (self.total_time > 0 and math.isfinite(self.total_time)):
            raise ValueError(f"total_time must be positive and finite, got {self.total_time}")
        prev = 0.0
        for j, t in enumerate(times):
            if not math.isfinite(t) or t <= prev:
                raise ValueError(
                    f"pulse {j} at {t!r} violates strict ordering 0 < t_1 < ... < t_N < T"
                )
            prev = t
        if times and times[-1] >= self.total_time:
            raise ValueError(f"last pulse {times[-1]!r} is not before total_time {self.total_time!r}")

    @property
    def n_pulses(self) -> int:
        return len(self.times)

    def as_array(self) -> np.ndarray:
        return np.array(self.times, dtype=float)

    def mirrored(self) -> "PulseSequence":
        return PulseSequence(tuple(self.total_time - t for t in reversed(self.times)), self.total_time)


@dataclass(frozen=True)
class FilterEvaluation:
    omega: float
    value: float


@dataclass(frozen=True)
class AttenuationResult:
    chi: float
    p_avg: float

    @property
    def infidelity(self) -> float:
        return 1.0 - self.p_avg


@dataclass(frozen=True)
class QuadratureConfig:
    """Settings for the spectral overlap integral.

    The upper limit is ``margin * 2*pi*(2N)/T``; ``N`` is floored at 1 so a
    free-induction decay still integrates over a nonempty band.
    """

    rel_tol: float = 1e-7
    abs_tol: float = 1e-14
    margin: float = 1.5
    panels_per_2pi: int = 2
    max_depth: int = 40
    omega_max: float | None = None

    def upper_limit(self, n_pulses: int, total_time: float) -> float:
        if self.omega_max is not None:
            return float(self.omega_max)
        return self.margin * 2.0 * math.pi * 2.0 * max(n_pulses, 1) / total_time


def switching_value(seq: PulseSequence, t: float) -> int:
    if t < 0 or t > seq.total_time:
        return 0
    flips = sum(1 for tj in seq.times if tj < t)
    return -1 if flips % 2 else 1


def merge_coincident(times, total_time: float) -> np.ndarray:
    """Drop pulses sitting on the boundary and cancel coincident pairs.

    A pulse at ``0`` or ``T`` does not change the measured fidelity, and two
    pi pulses at the same instant compose to the identity.
    """
    out: list[float] = []
    for t in np.sort(np.asarray(times, dtype=float)):
        if t <= 0.0 or t >= total_time:
            continue
        if out and out[-1] == t:
            out.pop()
        else:
            out.append(float(t))
    return np.array(out, dtype=float)


def filter_values(times, total_time: float, omega) -> np.ndarray:
    """Filter function at each angular frequency in ``omega``.

    Each constant stretch ``[t_k, t_{k+1}]`` of the switching function
    contributes ``(-1)^k d_k exp(i w m_k) sinc(w d_k / 2)`` to the Fourier
    integral (``d_k`` its length, ``m_k`` its midpoint). This is the
    telescoped closed form rewritten so it stays exact as ``w -> 0``.
    """
    times = np.asarray(times, dtype=float)
    omega = np.asarray(omega, dtype=float)
    edges = np.concatenate(([0.0], times, [float(total_time)]))
    d = np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    signs = np.where(np.arange(d.size) % 2 == 0, 1.0, -1.0)
    w = omega.reshape(-1, 1)
    weight = signs * d * np.sinc(w * d / (2.0 * np.pi))
    phase = w * mid
    re = np.sum(weight * np.cos(phase), axis=1)
    im = np.sum(weight * np.sin(phase), axis=1)
    return (re * re + im * im).reshape(omega.shape)


def filter_function(seq: PulseSequence, omega: float) -> FilterEvaluation:
    if omega < 0:
        raise ValueError(f"omega must be non-negative, got {omega}")
    value = float(filter_values(seq.times, seq.total_time, omega))
    return FilterEvaluation(float(omega), value)


def fid_filter(total_time: float, omega):
    """``T^2 sinc^2(w T / 2)`` for an evolution with no pulses."""
    x = np.asarray(omega, dtype=float) * total_time / 2.0
    return total_time**2 * np.sinc(x / np.pi) ** 2


def p_avg_from_chi(chi_value: float) -> float:
    return 0.5 * (1.0 + math.exp(-chi_value))


def _spectrum_breakpoints(spectrum, lo: float, hi: float) -> list[float]:
    centers = getattr(spectrum, "centers", None)
    if centers is None:
        return []
    return [float(c) for c in centers if lo < c < hi]


def chi_from_times(
    times,
    total_time: float,
    spectrum: Callable[[np.ndarray], np.ndarray],
    quad: QuadratureConfig | None = None,
    n_pulses: int | None = None,
) -> AttenuationResult:
    """Attenuation for raw pulse times (may contain degenerate pulses).

    ``n_pulses`` fixes the integration band; it defaults to ``len(times)``
    before merging so that a state keeps the same band throughout an episode.
    """
    quad = quad or QuadratureConfig()
    raw = np.asarray(times, dtype=float)
    n = raw.size if n_pulses is None else n_pulses
    clean = merge_coincident(raw, total_time)
    w_max = quad.upper_limit(n, total_time)
    n_panels = max(1, int(math.ceil(w_max * total_time * quad.panels_per_2pi / (2.0 * math.pi))))
    edges = list(np.linspace(0.0, w_max, n_panels + 1))
    edges += _spectrum_breakpoints(spectrum, 0.0, w_max)

    def integrand(w):
        return np.asarray(spectrum(w), dtype=float) * filter_values(clean, total_time, w)

    try:
        integral = adaptive_simpson(
            integrand, edges, rel_tol=quad.rel_tol, abs_tol=quad.abs_tol, max_depth=quad.max_depth
        )
    except QuadratureError as exc:
        raise QuadratureError(
            f"chi quadrature failed on [0, {w_max:.6g}] for {clean.size} pulses",
            exc.estimate / (2.0 * math.pi),
            exc.error / (2.0 * math.pi),
        ) from exc
    value = max(integral / (2.0 * math.pi), 0.0)
    return AttenuationResult(value, p_avg_from_chi(value))


def chi(seq: PulseSequence, spectrum, quad: QuadratureConfig | None = None) -> AttenuationResult:
    return chi_from_times(seq.times, seq.total_time, spectrum, quad)


def t2_star(spectrum, omega_c: float, rel_tol: float = 1e-10) -> float:
    """Free-induction-decay time ``((1/2pi) int_0^wc S dw)^(-1/2)``."""
    if not omega_c > 0:
        raise ValueError(f"omega_c must be positive, got {omega_c}")
    edges = [0.0, omega_c] + _spectrum_breakpoints(spectrum, 0.0, omega_c)
    n_panels = 64
    edges += list(np.linspace(0.0, omega_c, n_panels + 1))
    integral = adaptive_simpson(
        lambda w: np.asarray(spectrum(w), dtype=float) * np.ones_like(w), edges, rel_tol=rel_tol
    )
    if not integral > 0:
        raise ValueError(f"integrated spectrum on [0, {omega_c}] is {integral}; T2* undefined")
    return (integral / (2.0 * math.pi)) ** -0.5
