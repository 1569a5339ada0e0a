"""Release gate for the library.

Closed forms are checked against independent quadrature under fixed time
budgets, the simulator is checked against the closed forms on the shipped
presets, and the CLI is checked for byte-stable output. Every check pins
its seeds, trial counts, grids, and tolerances, so a regression in either
accuracy or runtime fails loudly instead of drifting.
"""

import math
import os
import subprocess
import sys
import time
from dataclasses import replace

import numpy as np
import pytest
import scipy.integrate
import scipy.special
import scipy.stats

from nmdetect.analytic import (
    kappa,
    mean_detection_time,
    p_detect,
    p_detect_deg_approx,
    p_detect_deg_exact,
    p_sense_within,
    sensing_radius,
    zeta,
)
from nmdetect.harness import figure_presets
from nmdetect.model import MarkerSpec, NmClass, SimConfig, SystemConfig, TargetSpec
from nmdetect.simulator import (
    detector_counts,
    estimate_curves,
    first_detection_times,
    simulate_sensing,
)

PRESETS = {spec.id: spec for spec in figure_presets()}


def _curve(preset_id, label):
    spec = PRESETS[preset_id]
    return next(c for c in spec.curves if c.label == label)


def _draw_tuples(seed, n):
    """Shared parameter draw: the start gap is expressed in units of the
    diffusion length so the count never underflows out of comparability."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        t = 10.0 ** rng.uniform(-2.0, 2.0)
        a = rng.uniform(0.5, 5.0)
        d = 10.0 ** rng.uniform(0.0, 2.3)
        lam = 10.0 ** rng.uniform(-6.0, -4.0)
        w = rng.uniform(0.0, 3.0)
        r = a + w * math.sqrt(4.0 * d * t)
        out.append((t, a, d, lam, r))
    return out


class TestClosedFormBudgets:
    def test_surface_start_reduction_grid(self):
        start = time.perf_counter()
        rng = np.random.default_rng(11)
        for _ in range(100):
            t = 10.0 ** rng.uniform(-2.0, 2.0)
            a = rng.uniform(0.5, 5.0)
            d = 10.0 ** rng.uniform(0.0, 2.3)
            lam = 10.0 ** rng.uniform(-7.0, -4.0)
            cls = NmClass(radius=a, diffusion=d, density=lam)
            reduced = (
                4.0 * math.pi * a * d * lam * t
                + 8.0 * a * a * lam * math.sqrt(math.pi * d * t)
            )
            assert abs(kappa(t, cls, r=a) - reduced) <= 1e-12
        elapsed = time.perf_counter() - start
        assert elapsed < 1.0, f"reduction grid took {elapsed:.2f}s"

    def test_count_matches_radial_quadrature(self):
        start = time.perf_counter()
        for t, a, d, lam, r in _draw_tuples(12, 50):
            cls = NmClass(radius=a, diffusion=d, density=lam)
            s = math.sqrt(4.0 * d * t)

            def integrand(rho):
                return rho * scipy.special.erfc((rho - a) / s)

            integral, _ = scipy.integrate.quad(
                integrand, r, np.inf, epsabs=1e-18, epsrel=1e-12, limit=200
            )
            want = 4.0 * math.pi * a * lam * integral
            got = kappa(t, cls, r)
            assert abs(got - want) <= 1e-8 * want, (t, a, d, lam, r)
        elapsed = time.perf_counter() - start
        assert elapsed < 10.0, f"quadrature grid took {elapsed:.2f}s"

    def test_degradable_count_matches_epoch_average(self):
        # zeta(t) must equal E[kappa(min(t, t_d))] over the exponential
        # degradation epoch; kappa itself is adjudicated by the test above
        start = time.perf_counter()
        rng = np.random.default_rng(13)
        for t, a, d, lam, r in _draw_tuples(14, 50):
            mu = (10.0 ** rng.uniform(-2.0, math.log10(50.0))) / t
            cls = NmClass(radius=a, diffusion=d, density=lam)

            def weighted(tau):
                return mu * math.exp(-mu * tau) * kappa(tau, cls, r)

            breaks = [1.0 / mu] if 1.0 / mu < t else []
            # epsabs=0 forces relative convergence; the count legitimately
            # reaches 1e-21 in this domain and any absolute floor swamps it
            integral, _ = scipy.integrate.quad(
                weighted, 0.0, t, points=breaks, epsabs=0.0, epsrel=1e-12, limit=200
            )
            want = integral + math.exp(-mu * t) * kappa(t, cls, r)
            got = zeta(t, cls, r, mu=mu)
            assert abs(got - want) <= 1e-6 * want, (t, a, d, lam, r, mu)
        elapsed = time.perf_counter() - start
        assert elapsed < 30.0, f"epoch-average grid took {elapsed:.2f}s"


@pytest.fixture(scope="module")
def swarm_reproduction():
    """The densest stock detection curve, simulated at full protocol size."""
    spec = PRESETS["fig2"]
    config = _curve("fig2", "p_detect_lam1e-05").config
    start = time.perf_counter()
    est = estimate_curves(config, spec.sim)
    elapsed = time.perf_counter() - start
    analytic = np.array([p_detect(t, config) for t in spec.sim.t_grid])
    return est, analytic, elapsed


class TestSwarmCurveReproduction:
    def test_simulation_tracks_closed_form(self, swarm_reproduction):
        est, analytic, elapsed = swarm_reproduction
        deviation = np.abs(est.p_hat - analytic)
        assert float(deviation.max()) <= 0.02
        assert elapsed <= 900.0, f"preset run took {elapsed:.0f}s"

    def test_closed_form_inside_confidence_band(self, swarm_reproduction):
        est, analytic, _ = swarm_reproduction
        covered = np.abs(est.p_hat - analytic) <= est.ci_half_width
        assert float(covered.mean()) >= 0.90


class TestDegradableTarget:
    def test_first_order_approximation_stays_close(self):
        spec = PRESETS["fig3"]
        for curve in spec.curves:
            worst = max(
                abs(
                    p_detect_deg_approx(t, curve.config)
                    - p_detect_deg_exact(t, curve.config)
                )
                for t in spec.sim.t_grid
            )
            assert worst <= 0.03, curve.label

    def test_simulation_matches_exact_curve(self):
        spec = PRESETS["fig3"]
        config = _curve("fig3", "p_deg_a34_mu0.10").config
        sim = replace(spec.sim, trials=20_000)
        est = estimate_curves(config, sim)
        exact = np.array([p_detect_deg_exact(t, config) for t in spec.sim.t_grid])
        assert float(np.abs(est.p_hat - exact).max()) <= 0.02


class TestMobileTarget:
    def test_two_body_walk_tracks_effective_diffusion(self):
        # the closed form folds the target's motion into each NM class and
        # keeps the initial hole pinned; the two-body walk is the process it
        # approximates, so this bounds that modelling gap plus noise
        config = _curve("fig5", "p_detect_mobile").config
        grid = tuple(float(x) for x in np.geomspace(2.0, 100.0, 12))
        sim = replace(PRESETS["fig5"].sim, trials=8_000, t_grid=grid)
        est = estimate_curves(config, sim)
        analytic = np.array([p_detect(t, config) for t in grid])
        assert float(np.abs(est.p_hat - analytic).max()) <= 0.03


class TestMeanDetectionTime:
    def test_sample_mean_matches_quadrature(self):
        config = SystemConfig(
            classes=(NmClass(radius=3.0, diffusion=100.0, density=1e-5),),
            exclusion_radius=30.0,
        )
        sim = SimConfig(
            time_step=1e-4,
            horizon=150.0,
            window_radius=300.0,
            trials=10_000,
            master_seed=42,
            t_grid=(150.0,),
        )
        times = first_detection_times(config, sim)
        # undetected trials enter at the horizon; the true tail beyond it
        # carries under one percent of the mean at this density
        sample_mean = float(np.where(np.isinf(times), sim.horizon, times).mean())
        want = mean_detection_time(config)
        assert abs(sample_mean - want) <= 0.05 * want

    def test_degradable_target_flags_infinite(self):
        config = SystemConfig(
            classes=(NmClass(radius=3.0, diffusion=100.0, density=1e-5),),
            exclusion_radius=30.0,
            target=TargetSpec(degradation_rate=0.1),
        )
        assert mean_detection_time(config) == math.inf


class TestSensing:
    def test_within_margin_equals_detection_with_inflated_radius(self):
        configs = (
            _curve("fig8", "p_sense_eta0.005").config,
            SystemConfig(
                classes=(
                    NmClass(radius=3.0, diffusion=100.0, density=1e-6),
                    NmClass(radius=4.0, diffusion=75.0, density=2e-6),
                ),
                exclusion_radius=30.0,
                marker=MarkerSpec(emission_rate=100.0, diffusion=100.0, threshold=0.02),
            ),
        )
        for config in configs:
            d_m = sensing_radius(config.marker)
            inflated = SystemConfig(
                classes=tuple(
                    NmClass(cls.radius + d_m, cls.diffusion, cls.density)
                    for cls in config.classes
                ),
                exclusion_radius=config.exclusion_radius,
            )
            for t in np.geomspace(0.05, 50.0, 40):
                got = p_sense_within(float(t), config, d_m)
                want = p_detect(float(t), inflated)
                assert abs(got - want) <= 1e-12

    def test_threshold_distance_reference(self):
        marker = MarkerSpec(emission_rate=100.0, diffusion=100.0, threshold=0.002)
        assert round(sensing_radius(marker), 2) == 39.79

    def test_simulation_matches_within_form(self):
        spec = PRESETS["fig8"]
        config = _curve("fig8", "p_sense_eta0.005").config
        d_m = sensing_radius(config.marker)
        sim = replace(spec.sim, trials=20_000)
        est = simulate_sensing(config, sim, d_m, "within_t")
        analytic = np.array([p_sense_within(t, config, d_m) for t in spec.sim.t_grid])
        assert float(np.abs(est.p_hat - analytic).max()) <= 0.02


class TestDetectorCountLaw:
    def test_counts_poisson_distributed_at_fixed_time(self):
        config = _curve("fig4", "nm_count_stationary").config
        sim = replace(
            PRESETS["fig4"].sim, trials=10_000, horizon=10.0, t_grid=(10.0,)
        )
        counts = detector_counts(config, sim)[:, 0]
        want_mean = sum(
            kappa(10.0, cls, config.exclusion_radius) for cls in config.classes
        )
        got_mean = float(counts.mean())
        assert abs(got_mean - want_mean) <= 0.05 * want_mean

        kmax = int(counts.max())
        observed = np.bincount(counts, minlength=kmax + 1).astype(float)
        expected = np.array(
            [
                math.exp(-want_mean) * want_mean**k / math.factorial(k)
                for k in range(kmax + 1)
            ]
        ) * len(counts)
        # pool the tail so every expected bin holds at least five trials
        tail = int(np.argmax(np.cumsum(expected[::-1]) >= 5.0))
        cut = len(expected) - tail - 1
        observed = np.concatenate([observed[:cut], [observed[cut:].sum()]])
        expected = np.concatenate(
            [expected[:cut], [len(counts) - expected[:cut].sum()]]
        )
        result = scipy.stats.chisquare(observed, expected)
        assert result.pvalue > 0.01, (result.pvalue, observed, expected)


class TestDeterminism:
    def test_preset_byte_identical_across_repeats_and_threads(self, tmp_path):
        def run(name, threads):
            out = tmp_path / name
            env = os.environ.copy()
            env["NMDETECT_THREADS"] = threads
            subprocess.run(
                [
                    sys.executable,
                    "-m",
                    "nmdetect.cli",
                    "figure",
                    "fig2",
                    "--trials",
                    "300",
                    "--seed",
                    "42",
                    "--out",
                    str(out),
                ],
                check=True,
                env=env,
                cwd=tmp_path,
            )
            return out.read_bytes()

        first = run("a.csv", threads="1")
        second = run("b.csv", threads="1")
        other_threads = run("c.csv", threads="2")
        assert first == second
        assert first == other_threads


class TestFigureRendering:
    def test_renders_every_preset_csv(self, tmp_path):
        nmplots = pytest.importorskip("nmplots")
        from nmdetect.cli import main

        for preset_id in sorted(PRESETS):
            csv_path = tmp_path / f"{preset_id}.csv"
            code = main(
                [
                    "figure",
                    preset_id,
                    "--trials",
                    "120",
                    "--horizon",
                    "20",
                    "--out",
                    str(csv_path),
                ]
            )
            assert code == 0, preset_id
            image = nmplots.render_auto(csv_path, tmp_path)
            image = os.fspath(image)
            assert os.path.exists(image), preset_id
            assert os.path.getsize(image) > 0, preset_id
