"""Randomised Lorentzian noise spectra and an Ornstein-Uhlenbeck noise oracle.

Random draws use numpy's PCG64 bit generator seeded directly with the
integer seed. Draw order for :func:`generate_spectrum`: one permutation of
the ascending candidate indices ``j = 1..2N`` (the first ``n - 1`` entries
become the non-DC centers), then ``n`` uniform amplitudes on ``[0, 1)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .filterfn import PulseSequence
from .quadrature import adaptive_simpson

RNG_NAME = "numpy.random.PCG64"


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class Lorentzian:
    """Peak-normalised Lorentzian ``A g^2 / ((w - w0)^2 + g^2)``."""

    amplitude: float
    center: float
    hwhm: float

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("amplitude must be >= 0")
        if not self.hwhm > 0:
            raise ValueError("hwhm must be > 0")
        if self.center < 0:
            raise ValueError("center must be >= 0")

    def __call__(self, omega):
        w = np.asarray(omega, dtype=float)
        g2 = self.hwhm * self.hwhm
        return self.amplitude * g2 / ((w - self.center) ** 2 + g2)

    @property
    def variance(self) -> float:
        """Zero-lag autocovariance of the matching stationary process (DC only)."""
        return 0.5 * self.amplitude * self.hwhm


@dataclass(frozen=True)
class NoiseSpectrum:
    components: tuple[Lorentzian, ...]
    norm_target: float | None = None
    seed: int | None = None
    n_pulses: int | None = None
    total_time: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))

    def __call__(self, omega):
        w = np.asarray(omega, dtype=float)
        total = np.zeros_like(w)
        for comp in self.components:
            total = total + comp(w)
        return total

    @property
    def centers(self) -> list[float]:
        return [c.center for c in self.components]

    def scaled(self, factor: float) -> "NoiseSpectrum":
        comps = tuple(Lorentzian(c.amplitude * factor, c.center, c.hwhm) for c in self.components)
        return NoiseSpectrum(comps, self.norm_target, self.seed, self.n_pulses, self.total_time)

    def to_dict(self) -> dict:
        return {
            "components": [asdict(c) for c in self.components],
            "norm_target": self.norm_target,
            "seed": self.seed,
            "n_pulses": self.n_pulses,
            "total_time": self.total_time,
            "rng": RNG_NAME,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseSpectrum":
        comps = tuple(Lorentzian(**c) for c in data["components"])
        return cls(comps, data.get("norm_target"), data.get("seed"), data.get("n_pulses"), data.get("total_time"))


def evaluate_spectrum(spec: NoiseSpectrum, omega):
    if np.any(np.asarray(omega) < 0):
        raise ValueError("omega must be non-negative")
    return spec(omega)


def l2_norm(spec: NoiseSpectrum, rel_tol: float = 1e-12) -> float:
    """``sqrt(int_0^inf S^2 dw / 2pi)``.

    The finite part runs to ``max(center) + 50 * hwhm``; the remaining tail
    is integrated after the substitution ``w = W / u``.
    """
    if not spec.components:
        return 0.0
    gamma = max(c.hwhm for c in spec.components)
    w_cut = max(spec.centers) + 50.0 * gamma
    n_panels = int(math.ceil(w_cut / gamma))
    edges = list(np.linspace(0.0, w_cut, n_panels + 1)) + spec.centers
    head = adaptive_simpson(lambda w: spec(w) ** 2, edges, rel_tol=rel_tol, abs_tol=0.0)

    def tail_integrand(u):
        out = np.zeros_like(u)
        nz = u > 0
        w = w_cut / u[nz]
        out[nz] = spec(w) ** 2 * w_cut / u[nz] ** 2
        return out

    tail = adaptive_simpson(tail_integrand, np.linspace(0.0, 1.0, 9), rel_tol=1e-10, abs_tol=1e-300)
    return math.sqrt((head + tail) / (2.0 * math.pi))


def generate_spectrum(
    n_pulses: int,
    total_time: float,
    n_lorentzians: int,
    norm_target: float,
    rng_seed: int,
) -> NoiseSpectrum:
    """One DC Lorentzian plus ``n_lorentzians - 1`` at distinct harmonics of ``2pi/T``."""
    n_candidates = 2 * n_pulses
    if n_lorentzians < 1:
        raise ValueError("need at least the DC component")
    if n_lorentzians - 1 > n_candidates:
        raise ValueError(
            f"{n_lorentzians - 1} distinct centers requested but only {n_candidates} available"
        )
    if norm_target < 0:
        raise ValueError("norm_target must be >= 0")
    rng = make_rng(rng_seed)
    hwhm = math.pi / total_time
    order = rng.permutation(np.arange(1, n_candidates + 1))
    harmonics = order[: n_lorentzians - 1]
    amplitudes = rng.uniform(0.0, 1.0, size=n_lorentzians)
    centers = [0.0] + [2.0 * math.pi * int(j) / total_time for j in harmonics]
    raw = NoiseSpectrum(
        tuple(Lorentzian(float(a), c, hwhm) for a, c in zip(amplitudes, centers)),
        norm_target,
        int(rng_seed),
        n_pulses,
        float(total_time),
    )
    norm = l2_norm(raw)
    return raw.scaled(norm_target / norm if norm > 0 else 0.0)


def save_spectrum(spec: NoiseSpectrum, path) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2) + "\n")


def load_spectrum(path) -> NoiseSpectrum:
    return NoiseSpectrum.from_dict(json.loads(Path(path).read_text()))


# -- Ornstein-Uhlenbeck oracle ------------------------------------------------


def _check_dc(component: Lorentzian) -> None:
    if component.center != 0:
        raise ValueError("the OU oracle only supports DC-centred Lorentzians")


def sample_ou_on_grid(component: Lorentzian, grid, rng: np.random.Generator, n_paths: int = 1):
    """Exact OU samples at arbitrary increasing ``grid`` times, shape ``(n_paths, len(grid))``.

    Autocovariance ``(A g / 2) exp(-g |tau|)`` has two-sided power spectral
    density ``A g^2 / (w^2 + g^2)``, i.e. the given Lorentzian.
    """
    _check_dc(component)
    grid = np.asarray(grid, dtype=float)
    sigma = math.sqrt(component.variance)
    out = np.empty((n_paths, grid.size))
    out[:, 0] = sigma * rng.standard_normal(n_paths)
    decay = np.exp(-component.hwhm * np.diff(grid))
    kick = sigma * np.sqrt(1.0 - decay**2)
    for k in range(grid.size - 1):
        out[:, k + 1] = decay[k] * out[:, k] + kick[k] * rng.standard_normal(n_paths)
    return out


def sample_ou_trajectory(component: Lorentzian, dt: float, n_steps: int, rng_seed, n_paths: int = 1):
    """``n_steps`` samples of a stationary OU path spaced by ``dt``."""
    _check_dc(component)
    if component.amplitude == 0:
        return np.zeros((n_paths, n_steps)) if n_paths > 1 else np.zeros(n_steps)
    grid = dt * np.arange(n_steps)
    paths = sample_ou_on_grid(component, grid, make_rng(rng_seed), n_paths)
    return paths if n_paths > 1 else paths[0]


@dataclass
class MonteCarloFidelity:
    p_avg: float
    stderr: float
    n_paths: int
    mean_cos: float = field(repr=False, default=0.0)


def monte_carlo_p_avg(
    component: Lorentzian,
    seq: PulseSequence,
    n_paths: int = 20_000,
    n_steps: int = 4096,
    rng_seed: int = 0,
    chunk: int = 5_000,
) -> MonteCarloFidelity:
    """Average ``(1 + cos phi(T)) / 2`` over sampled noise realisations.

    ``phi(T)`` is the trapezoidal integral of the noise times the switching
    function; pulse instants are inserted into the grid so every cell has a
    constant sign.
    """
    T = seq.total_time
    grid = np.union1d(np.linspace(0.0, T, n_steps + 1), np.array(seq.times))
    mids = 0.5 * (grid[:-1] + grid[1:])
    flips = np.searchsorted(np.array(seq.times), mids)
    sign = np.where(flips % 2 == 0, 1.0, -1.0)
    weights = 0.5 * sign * np.diff(grid)

    rng = make_rng(rng_seed)
    cos_vals = []
    remaining = n_paths
    while remaining > 0:
        m = min(chunk, remaining)
        beta = sample_ou_on_grid(component, grid, rng, m)
        phi = (beta[:, :-1] + beta[:, 1:]) @ weights
        cos_vals.append(np.cos(phi))
        remaining -= m
    c = np.concatenate(cos_vals)
    mean_cos = float(c.mean())
    stderr = float(c.std(ddof=1) / math.sqrt(c.size)) / 2.0
    return MonteCarloFidelity(0.5 * (1.0 + mean_cos), stderr, c.size, mean_cos)
