"""Thompson's group F as exact piecewise-linear maps of the unit interval.

Breakpoints are stored as :class:`fractions.Fraction`; floats only appear
when a map is applied to pulse times.
"""
from __future__ import annotations

import enum
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .filterfn import PulseSequence


class ActionId(enum.IntEnum):
    X0 = 0
    X0_INV = 1
    X1 = 2
    X1_INV = 3
    ID = 4

    @property
    def tag(self) -> str:
        return _TAGS[self]

    @classmethod
    def from_tag(cls, tag: str) -> "ActionId":
        try:
            return _FROM_TAG[tag]
        except KeyError:
            raise ValueError(f"unknown action {tag!r}; expected one of {sorted(_FROM_TAG)}") from None


_TAGS = {
    ActionId.X0: "x0",
    ActionId.X0_INV: "x0^-1",
    ActionId.X1: "x1",
    ActionId.X1_INV: "x1^-1",
    ActionId.ID: "id",
}
_FROM_TAG = {v: k for k, v in _TAGS.items()}
N_ACTIONS = len(ActionId)


def format_word(actions: Iterable[ActionId]) -> str:
    return " ".join(ActionId(a).tag for a in actions)


def parse_word(text: str) -> list[ActionId]:
    return [ActionId.from_tag(tok) for tok in text.split()]


def _is_dyadic(q: Fraction) -> bool:
    d = q.denominator
    return d & (d - 1) == 0


def is_power_of_two(q: Fraction) -> bool:
    if q <= 0:
        return False
    n, d = q.numerator, q.denominator
    return n & (n - 1) == 0 and d & (d - 1) == 0


@dataclass(frozen=True)
class PiecewiseLinearMap:
    """Increasing piecewise-linear bijection of [0, 1] through ``(xs[i], ys[i])``."""

    xs: tuple[Fraction, ...]
    ys: tuple[Fraction, ...]

    def __post_init__(self):
        xs = tuple(Fraction(x) for x in self.xs)
        ys = tuple(Fraction(y) for y in self.ys)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        if len(xs) != len(ys) or len(xs) < 2:
            raise ValueError("need matching breakpoint lists with at least two entries")
        if xs[0] != 0 or ys[0] != 0 or xs[-1] != 1 or ys[-1] != 1:
            raise ValueError("map must fix 0 and 1")
        for i in range(len(xs) - 1):
            if not (xs[i] < xs[i + 1] and ys[i] < ys[i + 1]):
                raise ValueError("breakpoints must be strictly increasing in both coordinates")
        # dyadic rationals convert to float exactly
        object.__setattr__(self, "_xf", np.array([float(x) for x in xs]))
        object.__setattr__(self, "_yf", np.array([float(y) for y in ys]))

    @classmethod
    def from_points(cls, points: Sequence[tuple]) -> "PiecewiseLinearMap":
        return cls(tuple(p[0] for p in points), tuple(p[1] for p in points))

    @property
    def breakpoints(self) -> list[tuple[Fraction, Fraction]]:
        return list(zip(self.xs, self.ys))

    @property
    def slopes(self) -> list[Fraction]:
        return [
            (self.ys[i + 1] - self.ys[i]) / (self.xs[i + 1] - self.xs[i]) for i in range(len(self.xs) - 1)
        ]

    def is_in_f(self) -> bool:
        """Dyadic breakpoints and power-of-two slopes."""
        return all(_is_dyadic(x) and _is_dyadic(y) for x, y in self.breakpoints) and all(
            is_power_of_two(s) for s in self.slopes
        )

    def __call__(self, x):
        """Exact evaluation for a scalar ``Fraction``/``int``; float path otherwise."""
        if isinstance(x, (Fraction, int)):
            x = Fraction(x)
            if not 0 <= x <= 1:
                raise ValueError("x outside [0, 1]")
            i = min(bisect_right(self.xs, x) - 1, len(self.xs) - 2)
            x0, x1, y0, y1 = self.xs[i], self.xs[i + 1], self.ys[i], self.ys[i + 1]
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        return self.evaluate(x)

    def evaluate(self, x) -> np.ndarray:
        return np.interp(np.asarray(x, dtype=float), self._xf, self._yf)

    def inverse(self) -> "PiecewiseLinearMap":
        return PiecewiseLinearMap(self.ys, self.xs)

    def simplified(self) -> "PiecewiseLinearMap":
        """Drop breakpoints where the slope does not change."""
        pts = self.breakpoints
        keep = [pts[0]]
        for i in range(1, len(pts) - 1):
            (xa, ya), (xb, yb), (xc, yc) = keep[-1], pts[i], pts[i + 1]
            if (yb - ya) * (xc - xb) != (yc - yb) * (xb - xa):
                keep.append(pts[i])
        keep.append(pts[-1])
        return PiecewiseLinearMap.from_points(keep)


IDENTITY = PiecewiseLinearMap((Fraction(0), Fraction(1)), (Fraction(0), Fraction(1)))
_X0 = PiecewiseLinearMap.from_points(
    [(0, 0), (Fraction(1, 2), Fraction(1, 4)), (Fraction(3, 4), Fraction(1, 2)), (1, 1)]
)
_X1 = PiecewiseLinearMap.from_points(
    [
        (0, 0),
        (Fraction(1, 2), Fraction(1, 2)),
        (Fraction(3, 4), Fraction(5, 8)),
        (Fraction(7, 8), Fraction(3, 4)),
        (1, 1),
    ]
)
_GENERATORS = {
    ActionId.X0: _X0,
    ActionId.X0_INV: _X0.inverse(),
    ActionId.X1: _X1,
    ActionId.X1_INV: _X1.inverse(),
    ActionId.ID: IDENTITY,
}


def generator(action: ActionId) -> PiecewiseLinearMap:
    return _GENERATORS[ActionId(action)]


def compose(outer: PiecewiseLinearMap, inner: PiecewiseLinearMap) -> PiecewiseLinearMap:
    """Exact ``outer(inner(x))``.

    Breakpoints of the result lie at the breakpoints of ``inner`` and at the
    preimages under ``inner`` of the breakpoints of ``outer``.
    """
    inv = inner.inverse()
    xs = sorted(set(inner.xs) | {inv(y) for y in outer.xs})
    ys = [outer(inner(x)) for x in xs]
    return PiecewiseLinearMap(tuple(xs), tuple(ys)).simplified()


def compose_word(actions: Iterable[ActionId]) -> PiecewiseLinearMap:
    """Map equal to applying ``actions`` in order (first action innermost)."""
    result = IDENTITY
    for a in actions:
        result = compose(generator(a), result)
    return result


def map_times(m: PiecewiseLinearMap, times, total_time: float) -> np.ndarray:
    """``t -> T * m(t / T)`` on a float array."""
    return total_time * m.evaluate(np.asarray(times, dtype=float) / total_time)


def apply_map(m: PiecewiseLinearMap, seq: PulseSequence) -> PulseSequence:
    return PulseSequence(tuple(map_times(m, seq.times, seq.total_time)), seq.total_time)
