"""Standard dynamical-decoupling pulse sequences."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

from .filterfn import PulseSequence
from .spectra import make_rng


class Family(str, enum.Enum):
    PDD = "pdd"
    CPMG = "cpmg"
    UDD = "udd"
    CDD = "cdd"
    PRDD = "prdd"


@dataclass(frozen=True)
class SequenceFamily:
    kind: Family
    n_pulses: int
    total_time: float = 1.0
    rng_seed: int | None = None
    cdd_order: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Family(self.kind))
        if self.n_pulses < 1:
            raise ValueError("n_pulses must be >= 1")
        if self.kind is Family.PRDD and self.rng_seed is None:
            raise ValueError("PRDD needs an rng_seed")


def cdd_fractions(order: int) -> list[Fraction]:
    """Pulse positions of the order-``order`` concatenated sequence on [0, 1].

    ``C_0`` is free evolution and ``C_n = C_{n-1} X C_{n-1} X``. Adjacent
    pulse pairs cancel. For odd orders the construction ends with a pulse at
    exactly ``t = 1``, which is kept here and dropped by :func:`make_sequence`.
    """
    if order < 1:
        raise ValueError("CDD order must be >= 1")
    pulses: list[Fraction] = []
    for _ in range(order):
        half = Fraction(1, 2)
        first = [p * half for p in pulses]
        second = [half + p * half for p in pulses]
        merged = first + [half] + second + [Fraction(1)]
        pulses = _cancel_pairs(merged)
    return pulses


def _cancel_pairs(pulses: list[Fraction]) -> list[Fraction]:
    out: list[Fraction] = []
    for p in pulses:
        if out and out[-1] == p:
            out.pop()
        else:
            out.append(p)
    return out


def cdd_order_for(n_pulses: int, max_order: int = 20) -> int:
    for order in range(1, max_order + 1):
        if len([p for p in cdd_fractions(order) if p < 1]) == n_pulses:
            return order
    raise ValueError(f"no CDD order up to {max_order} has {n_pulses} interior pulses")


def make_sequence(family: SequenceFamily) -> PulseSequence:
    n = family.n_pulses
    T = family.total_time
    kind = family.kind
    if kind is Family.PDD:
        times = [j * T / (n + 1) for j in range(1, n + 1)]
    elif kind is Family.CPMG:
        times = [(j - 0.5) * T / n for j in range(1, n + 1)]
    elif kind is Family.UDD:
        times = [T * math.sin(j * math.pi / (2 * n + 2)) ** 2 for j in range(1, n + 1)]
    elif kind is Family.CDD:
        order = family.cdd_order if family.cdd_order is not None else cdd_order_for(n)
        interior = [p for p in cdd_fractions(order) if p < 1]
        if len(interior) != n:
            raise ValueError(f"CDD order {order} gives {len(interior)} pulses, expected {n}")
        times = [float(p) * T for p in interior]
    elif kind is Family.PRDD:
        rng = make_rng(family.rng_seed)
        times = []
        for j in range(n):
            lo, hi = j * T / n, (j + 1) * T / n
            t = rng.uniform(lo, hi)
            while t <= lo:
                t = rng.uniform(lo, hi)
            times.append(float(t))
    else:  # pragma: no cover
        raise ValueError(kind)
    return PulseSequence(tuple(times), T)
