"""Vectorised adaptive Simpson quadrature.

Intervals are refined breadth-first: every pass evaluates the integrand at
all pending midpoints in a single call, so the cost is dominated by numpy
rather than Python recursion.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np


class QuadratureError(RuntimeError):
    """Raised when refinement stops before the tolerance is met."""

    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(f"{message} (estimate={estimate!r}, error={error!r})")
        self.estimate = estimate
        self.error = error


def adaptive_simpson(
    func: Callable[[np.ndarray], np.ndarray],
    breakpoints: Sequence[float],
    rel_tol: float = 1e-7,
    abs_tol: float = 1e-14,
    max_depth: int = 40,
    return_error: bool = False,
):
    """Integrate ``func`` over ``[breakpoints[0], breakpoints[-1]]``.

    ``func`` must accept and return 1-D arrays. The initial panels are the
    intervals between consecutive ``breakpoints``; each panel is then
    bisected until the Richardson error estimate of every leaf is below its
    share of ``max(rel_tol * |I|, abs_tol)``.
    """
    edges = np.unique(np.asarray(breakpoints, dtype=float))
    if edges.size < 2:
        return (0.0, 0.0) if return_error else 0.0
    width_total = edges[-1] - edges[0]

    a = edges[:-1]
    b = edges[1:]
    m = 0.5 * (a + b)
    fa = func(a)
    fb = func(b)
    fm = func(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    accepted = 0.0
    accepted_err = 0.0
    for _ in range(max_depth):
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        vals = func(np.concatenate([lm, rm]))
        flm, frm = vals[: lm.size], vals[lm.size:]
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        refined = left + right
        err = np.abs(refined - whole) / 15.0

        estimate = accepted + float(np.sum(refined))
        budget = max(rel_tol * abs(estimate), abs_tol)
        ok = err <= budget * (b - a) / width_total
        if np.any(ok):
            # Richardson extrapolation on converged leaves
            accepted += float(np.sum(refined[ok] + (refined[ok] - whole[ok]) / 15.0))
            accepted_err += float(np.sum(err[ok]))
        keep = ~ok
        pending_err = float(np.sum(err[keep]))
        if not np.any(keep):
            return (accepted, accepted_err) if return_error else accepted
        a, m, b = a[keep], m[keep], b[keep]
        fa, fm, fb = fa[keep], fm[keep], fb[keep]
        flm, frm = flm[keep], frm[keep]
        left, right = left[keep], right[keep]
        # children: [a, m] and [m, b]
        a, m, b = (
            np.concatenate([a, m]),
            np.concatenate([0.5 * (a + m), 0.5 * (m + b)]),
            np.concatenate([m, b]),
        )
        fa, fm, fb = np.concatenate([fa, fm]), np.concatenate([flm, frm]), np.concatenate([fm, fb])
        whole = np.concatenate([left, right])

    raise QuadratureError(
        "adaptive Simpson did not converge",
        estimate=accepted + float(np.sum(whole)),
        error=accepted_err + pending_err,
    )
