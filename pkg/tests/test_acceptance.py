"""Acceptance gate. Each criterion records one PASS/FAIL line at its tolerance.

Criterion 9 trains the full desk preset (10 spectra x 1500 episodes) and is
the slow one. Set ``GROUPDD_FULL_SCALE=1`` to also run the full-scale
benchmark, which is informational only.
"""
from __future__ import annotations

import math
import os
import time
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest

from groupdd import reporting
from groupdd.config import resolve
from groupdd.filterfn import chi, fid_filter, filter_values
from groupdd.harness import benchmark, episode_config_for, spectrum_for, trace_episode
from groupdd.qnet import ddqn_targets, forward, init_network, td_loss_and_grads
from groupdd.sequences import Family, SequenceFamily, make_sequence
from groupdd.spectra import Lorentzian, NoiseSpectrum, l2_norm, monte_carlo_p_avg
from groupdd.thompson import IDENTITY, ActionId, compose, compose_word, generator, is_power_of_two

from conftest import ACCEPTANCE_LINES
from oracles import fft_filter, quad_l2_norm


def record(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def desk_report():
    start = time.perf_counter()
    cfg = resolve("desk")
    report = benchmark(cfg)
    return cfg, report, time.perf_counter() - start


def test_01_filter_matches_fft():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    n_cells, pad = 2**16, 10
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(0, 13))
        cells = np.sort(rng.choice(np.arange(1, n_cells), size=n, replace=False))
        omega, ref = fft_filter(cells, n_cells, pad)
        omega, ref = omega[:200], ref[:200]  # 2 pi k / 10 covers [0, 39.8 pi]
        got = filter_values(cells / n_cells, 1.0, omega)
        # exact zeros of F (e.g. FID at w = 2 pi k) carry only round-off on both sides
        worst = max(worst, float(np.max(np.abs(got - ref) / np.maximum(ref, 1e-12))))
    elapsed = time.perf_counter() - start
    record(1, "filter vs FFT oracle", worst <= 1e-6 and elapsed < 30,
           f"max rel err {worst:.2e} <= 1e-06, {elapsed:.1f} s < 30 s")


def test_02_fid_closed_form():
    worst = 0.0
    for T in (1.0, 2.5):
        omega = np.linspace(0.0, 40 * np.pi, 1000)
        x = omega * T / 2
        with np.errstate(invalid="ignore", divide="ignore"):
            ref = np.where(x == 0, T * T, T * T * (np.sin(x) / x) ** 2)
        worst = max(worst, float(np.max(np.abs(filter_values([], T, omega) - ref))))
        worst = max(worst, float(np.max(np.abs(fid_filter(T, omega) - ref))))
    record(2, "FID closed form", worst <= 1e-12, f"max abs err {worst:.2e} <= 1e-12")


def test_03_monte_carlo_coherence():
    start = time.perf_counter()
    comp = Lorentzian(10.0, 0.0, math.pi)
    seq = make_sequence(SequenceFamily(Family.CPMG, 2))
    mc = monte_carlo_p_avg(comp, seq, n_paths=20_000, n_steps=2048, rng_seed=1)
    p = chi(seq, NoiseSpectrum((comp,))).p_avg
    z = (p - mc.p_avg) / mc.stderr
    elapsed = time.perf_counter() - start
    record(3, "Monte Carlo coherence", abs(z) <= 3 and mc.n_paths >= 20_000 and elapsed < 300,
           f"filter {p:.5f} vs OU {mc.p_avg:.5f} +- {mc.stderr:.5f}, |z| = {abs(z):.2f} <= 3, "
           f"{mc.n_paths} paths, {elapsed:.1f} s < 300 s")


def test_04_spectrum_normalisation():
    worst = 0.0
    count = 0
    for preset in ("desk", "paper"):
        cfg = resolve(preset)
        for i in range(cfg.n_spectra):
            spec = spectrum_for(cfg, i)
            for value in (quad_l2_norm(spec), l2_norm(spec)):
                worst = max(worst, abs(value - 10.0))
            count += 1
    record(4, "spectrum normalisation", worst <= 1e-6, f"{count} spectra, max |norm - 10| {worst:.2e} <= 1e-06")


def _squared_filter_integral(times, lo, hi, panel=np.pi / 4, order=24):
    """Gauss-Legendre on narrow panels; F^2 oscillates at most twice per unit w."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.arange(lo, hi + 0.5 * panel, panel)
    mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * np.diff(edges)
    w = (mid[:, None] + half[:, None] * nodes).ravel()
    f = filter_values(times, 1.0, w).reshape(mid.size, order)
    return float(np.sum(half * (f**2 @ weights)))


def test_05_norm_concentration():
    rng = np.random.default_rng(5)
    band = 2 * np.pi * 2 * 10
    fractions = []
    for _ in range(100):
        t = np.sort(rng.uniform(0.0, 1.0, 10))
        inside = _squared_filter_integral(t, 0.0, band)
        total = inside + _squared_filter_integral(t, band, 20 * band)
        fractions.append(inside / total)
    worst = min(fractions)
    record(5, "norm concentration", worst >= 0.99,
           f"min fraction {worst:.5f} >= 0.99 over 100 uniform random sequences, median {np.median(fractions):.5f}")


def test_06_thompson_algebra():
    x = np.linspace(0.0, 1.0, 1000)
    inv_err = 0.0
    for a, b in ((ActionId.X0, ActionId.X0_INV), (ActionId.X1, ActionId.X1_INV)):
        g, h = generator(a), generator(b)
        inv_err = max(inv_err, float(np.max(np.abs(g.evaluate(h.evaluate(x)) - x))))
        inv_err = max(inv_err, float(np.max(np.abs(h.evaluate(g.evaluate(x)) - x))))
    x0, x1 = generator(ActionId.X0), generator(ActionId.X1)
    p = compose(x0, x1.inverse())
    q = compose(x0.inverse(), compose(x1, x0))
    comm = compose(compose(p, q), compose(p.inverse(), q.inverse()))
    comm_ok = comm == IDENTITY and all(comm(Fraction(k, 4096)) == Fraction(k, 4096) for k in range(4097))
    rng = np.random.default_rng(64)
    closure_ok = True
    for _ in range(20):
        m = compose_word([ActionId(int(k)) for k in rng.integers(0, 5, 64)])
        dyadic = all(v.denominator & (v.denominator - 1) == 0 for pt in m.breakpoints for v in pt)
        closure_ok &= dyadic and all(is_power_of_two(s) for s in m.slopes)
    record(6, "Thompson algebra", inv_err <= 1e-14 and comm_ok and closure_ok,
           f"inverse err {inv_err:.1e} <= 1e-14, commutator identity {comm_ok}, 64-deep closure {closure_ok}")


def test_07_cdd_and_udd_anchors():
    cdd = make_sequence(SequenceFamily(Family.CDD, 10, cdd_order=4))
    udd = make_sequence(SequenceFamily(Family.UDD, 1))
    ok = cdd.n_pulses == 10 and abs(udd.times[0] - 0.5) <= 1e-15 and udd.n_pulses == 1
    record(7, "CDD4 and UDD1 anchors", ok, f"CDD4 pulses {cdd.n_pulses} == 10, UDD1 {list(udd.times)} == [0.5]")


def test_08_gradient_check():
    start = time.perf_counter()
    worst = 0.0
    step = 1e-6
    for seed in range(20):
        rng = np.random.default_rng(1000 + seed)
        sizes = [int(rng.integers(2, 6)), int(rng.integers(2, 8)), int(rng.integers(2, 8)), 5]
        online, target = init_network(sizes, rng), init_network(sizes, rng)
        n = int(rng.integers(1, 17))
        s, s2 = rng.uniform(size=(n, sizes[0])), rng.uniform(size=(n, sizes[0]))
        a, r, d = rng.integers(0, 5, n), rng.uniform(size=n), rng.random(n) < 0.25

        def loss():
            y = ddqn_targets(online, target, r, s2, d, 0.99)
            q = forward(online, s)[np.arange(n), a]
            return float(np.mean((q - y) ** 2))

        y = ddqn_targets(online, target, r, s2, d, 0.99)
        _, grads = td_loss_and_grads(online, s, a, y)
        for p, g in zip(online.params, grads):
            for idx in np.ndindex(p.shape):
                if abs(g[idx]) <= 1e-8:
                    continue
                orig = p[idx]
                p[idx] = orig + step
                up = loss()
                p[idx] = orig - step
                down = loss()
                p[idx] = orig
                fd = (up - down) / (2 * step)
                worst = max(worst, abs(fd - g[idx]) / max(abs(fd), abs(g[idx])))
    elapsed = time.perf_counter() - start
    record(8, "gradient check", worst <= 1e-5 and elapsed < 60,
           f"max rel err {worst:.2e} <= 1e-05 over 20 nets, {elapsed:.1f} s < 60 s")


def test_09_desk_improvement(desk_report):
    cfg, report, elapsed = desk_report
    runs = [r for r in report.runs if r.family == "cpmg"]
    improved = sum(r.best_infidelity <= r.initial_infidelity for r in runs)
    med_init = float(np.median([r.initial_infidelity for r in runs]))
    med_best = float(np.median([r.best_infidelity for r in runs]))
    ratio = med_best / med_init
    agg = report.aggregates["cpmg"]
    ok = improved >= 9 and ratio <= 0.85 and elapsed < 7200
    record(9, "desk-scale improvement", ok,
           f"improved {improved}/{len(runs)} >= 9, median best/initial {ratio:.3f} <= 0.85, "
           f"mean reduction factor {agg['mean_reduction_factor']:.3f}, {elapsed / 60:.1f} min < 120 min")


@pytest.mark.skipif(os.environ.get("GROUPDD_FULL_SCALE") != "1", reason="full scale runs only on request")
def test_09_full_scale_informational():
    report = benchmark(replace(resolve("paper"), jobs=os.cpu_count() or 1))
    for fam, agg in report.aggregates.items():
        f_med, f_mean = agg["median_reduction_factor"], agg["mean_reduction_factor"]
        print(f"full scale {fam}: median factor {f_med:.3f}, mean factor {f_mean:.3f} (band 1.3-1.8)")


def test_10_replay_determinism(desk_report):
    cfg, report, _ = desk_report
    worst = 0.0
    for r in report.runs:
        tr = trace_episode(episode_config_for(cfg, r.family, r.spectrum_index), r.best_word)
        worst = max(worst, abs(tr.terminal_infidelity - r.best_infidelity))
    small = replace(resolve("desk"), n_spectra=3, episodes=20, families=("cpmg", "udd"), master_seed=11)
    serial = reporting.report_json(benchmark(replace(small, jobs=1)))
    parallel = reporting.report_json(benchmark(replace(small, jobs=2)))
    same = serial == parallel
    record(10, "replay determinism", worst <= 1e-12 and same,
           f"max replay diff {worst:.1e} <= 1e-12 over {len(report.runs)} runs, serial == parallel bytes {same}")
