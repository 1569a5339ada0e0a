"""Monte Carlo engine: deployment laws, replay determinism, and agreement
with the closed forms on small configurations.

Time steps here are chosen per test: distribution-shape checks are
step-independent, closed-form comparisons use a fine step so the
discretization bias stays inside the stated slack.
"""

import math
import os
import subprocess
import sys

import numpy as np
import pytest
import scipy.stats

from nmdetect.analytic import kappa, p_single
from nmdetect.model import MarkerSpec, NmClass, SimConfig, SystemConfig, TargetSpec
from nmdetect.numerics import RngStream
from nmdetect.simulator import (
    Deployment,
    McEstimate,
    TrialOutcome,
    detector_counts,
    estimate_curves,
    first_detection_times,
    run_trial,
    sample_deployment,
    simulate_sensing,
)

CLS = NmClass(radius=3.0, diffusion=100.0, density=1e-5)
SWARM = SystemConfig(classes=(CLS,), exclusion_radius=30.0)


def sim_config(**overrides) -> SimConfig:
    base = dict(
        time_step=1e-3,
        horizon=10.0,
        window_radius=150.0,
        trials=200,
        master_seed=7,
        t_grid=(1.0, 5.0, 10.0),
    )
    base.update(overrides)
    return SimConfig(**base)


class TestSampleDeployment:
    def test_single_nm_layout(self):
        config = SystemConfig(
            classes=(CLS, NmClass(4.0, 75.0, 1e-5)),
            exclusion_radius=30.0,
            single_nm_distance=50.0,
        )
        dep = sample_deployment(config, sim_config(), RngStream(7, 0))
        assert len(dep.positions_by_class) == 2
        assert dep.positions_by_class[0].shape == (1, 3)
        assert np.allclose(dep.positions_by_class[0][0], [0.0, 0.0, 50.0])
        assert dep.positions_by_class[1].shape == (0, 3)

    def test_replay_is_exact(self):
        sim = sim_config()
        a = sample_deployment(SWARM, sim, RngStream(7, 3))
        b = sample_deployment(SWARM, sim, RngStream(7, 3))
        for x, y in zip(a.positions_by_class, b.positions_by_class):
            assert np.array_equal(x, y)

    def test_distinct_streams_differ(self):
        sim = sim_config()
        a = sample_deployment(SWARM, sim, RngStream(7, 3))
        b = sample_deployment(SWARM, sim, RngStream(7, 4))
        assert a.positions_by_class[0].shape != b.positions_by_class[0].shape or not np.array_equal(
            a.positions_by_class[0], b.positions_by_class[0]
        )

    def test_zero_density_class_is_empty(self):
        config = SystemConfig(
            classes=(CLS, NmClass(4.0, 75.0, 0.0)), exclusion_radius=30.0
        )
        dep = sample_deployment(config, sim_config(), RngStream(7, 0))
        assert dep.positions_by_class[1].shape == (0, 3)

    def test_counts_are_poisson_distributed(self):
        sim = sim_config()
        volume = (4.0 / 3.0) * math.pi * (sim.window_radius**3 - 30.0**3)
        mean = CLS.density * volume
        counts = np.array(
            [
                sample_deployment(SWARM, sim, RngStream(11, k)).positions_by_class[0].shape[0]
                for k in range(400)
            ]
        )
        # mean and variance agree for a Poisson law
        se = math.sqrt(mean / len(counts))
        assert abs(counts.mean() - mean) < 4 * se
        assert 0.75 < counts.var(ddof=1) / mean < 1.3

    def test_radial_and_angular_laws(self):
        config = SystemConfig(
            classes=(NmClass(3.0, 100.0, 1e-4),), exclusion_radius=30.0
        )
        sim = sim_config(window_radius=300.0)
        pos = sample_deployment(config, sim, RngStream(13, 0)).positions_by_class[0]
        assert pos.shape[0] > 5000
        radii = np.linalg.norm(pos, axis=1)
        assert radii.min() >= 30.0
        assert radii.max() <= 300.0
        # cube of the radius is uniform on [r^3, R^3]
        u = (radii**3 - 30.0**3) / (300.0**3 - 30.0**3)
        assert scipy.stats.kstest(u, "uniform").pvalue > 1e-3
        # directions are isotropic: z/|x| is uniform on [-1, 1]
        cosines = pos[:, 2] / radii
        assert scipy.stats.kstest((cosines + 1.0) / 2.0, "uniform").pvalue > 1e-3


class TestRunTrial:
    def test_replay_is_exact(self):
        sim = sim_config()
        a = run_trial(SWARM, sim, RngStream(7, 1))
        b = run_trial(SWARM, sim, RngStream(7, 1))
        assert a == b

    def test_outcome_invariants(self):
        sim = sim_config(trials=1)
        for k in range(30):
            out = run_trial(SWARM, sim, RngStream(23, k))
            assert out.degradation_time == math.inf
            assert out.detectors_by_time == tuple(sorted(out.detectors_by_time))
            if out.first_detection_time is not None:
                assert 0.0 <= out.first_detection_time <= sim.horizon
                assert out.detected == (out.first_detection_time <= sim.horizon)
            else:
                assert not out.detected
                assert out.detectors_by_time[-1] == 0

    def test_detected_respects_degradation_epoch(self):
        config = SystemConfig(
            classes=(CLS,), exclusion_radius=30.0, target=TargetSpec(degradation_rate=0.3)
        )
        sim = sim_config(trials=1)
        saw_censored = False
        for k in range(60):
            out = run_trial(config, sim, RngStream(29, k))
            assert out.degradation_time > 0.0
            limit = min(sim.horizon, out.degradation_time)
            if out.first_detection_time is not None:
                assert out.detected == (out.first_detection_time <= limit)
                if not out.detected:
                    saw_censored = True
            else:
                assert not out.detected
        assert saw_censored, "no trial exercised the censoring branch"

    def test_empty_deployment_never_detects(self):
        dep = Deployment((np.zeros((0, 3)),))
        out = run_trial(SWARM, sim_config(), RngStream(7, 1), deployment=dep)
        assert not out.detected
        assert out.first_detection_time is None

    def test_degradation_epochs_follow_exponential_law(self):
        config = SystemConfig(
            classes=(CLS,),
            exclusion_radius=30.0,
            target=TargetSpec(degradation_rate=0.4),
            single_nm_distance=None,
        )
        # keep the walk trivial so the trial cost is the draw itself
        far = SystemConfig(
            classes=(NmClass(3.0, 100.0, 0.0),),
            exclusion_radius=30.0,
            target=TargetSpec(degradation_rate=0.4),
        )
        sim = sim_config(horizon=0.1, t_grid=(0.1,), trials=1)
        times = np.array(
            [run_trial(far, sim, RngStream(31, k)).degradation_time for k in range(500)]
        )
        assert scipy.stats.kstest(times, "expon", args=(0.0, 1.0 / 0.4)).pvalue > 1e-3


class TestEstimateCurves:
    def test_requires_a_real_sample(self):
        with pytest.raises(ValueError):
            estimate_curves(SWARM, sim_config(trials=50))

    def test_replay_is_exact(self):
        sim = sim_config(trials=150)
        a = estimate_curves(SWARM, sim)
        b = estimate_curves(SWARM, sim)
        assert np.array_equal(a.p_hat, b.p_hat)
        assert np.array_equal(a.ci_half_width, b.ci_half_width)
        assert np.array_equal(a.mean_detectors, b.mean_detectors)

    def test_estimates_are_coherent(self):
        est = estimate_curves(SWARM, sim_config(trials=200))
        assert est.trials == 200
        assert np.all(np.diff(est.p_hat) >= 0.0)
        assert np.all(np.diff(est.mean_detectors) >= 0.0)
        # at least one NM detects whenever the count is positive
        assert np.all(est.p_hat <= est.mean_detectors + 1e-12)
        assert np.all(est.ci_half_width <= 1.96 * 0.5 / math.sqrt(200) + 1e-12)

    def test_touching_nm_detects_immediately(self):
        config = SystemConfig(
            classes=(NmClass(4.0, 100.0, 1e-5),),
            exclusion_radius=30.0,
            single_nm_distance=4.0,
        )
        est = estimate_curves(config, sim_config(trials=120))
        assert np.all(est.p_hat == 1.0)
        assert np.all(est.ci_half_width == 0.0)


class TestAgainstClosedForms:
    def test_single_nm_hitting_probability(self):
        a, D, d, t = 4.0, 100.0, 10.0, 10.0
        config = SystemConfig(
            classes=(NmClass(a, D, 1e-5),), exclusion_radius=30.0, single_nm_distance=d
        )
        sim = sim_config(
            time_step=1e-4, horizon=t, t_grid=(t,), trials=4000, master_seed=101
        )
        est = estimate_curves(config, sim)
        want = p_single(t, a, D, d)
        # slack is three binomial sigmas; the bridge-corrected walk leaves
        # no bias visible at this trial count
        assert abs(est.p_hat[-1] - want) < 0.025

    def test_degradation_lowers_detection(self):
        deg = SystemConfig(
            classes=(NmClass(3.0, 100.0, 3e-5),),
            exclusion_radius=30.0,
            target=TargetSpec(degradation_rate=0.5),
        )
        plain = SystemConfig(classes=deg.classes, exclusion_radius=30.0)
        sim = sim_config(trials=400, horizon=10.0, t_grid=(10.0,), master_seed=51)
        p_deg = estimate_curves(deg, sim).p_hat[-1]
        p_plain = estimate_curves(plain, sim).p_hat[-1]
        assert p_deg < p_plain - 0.05


class TestWindowSuperposition:
    def test_outer_shell_adds_monotonically_and_negligibly(self):
        # a window double the inner one changes nothing for the shared NMs
        # (per-NM streams are keyed by class and in-class index), and the
        # extra shell can only add detections; by t=10 s nothing deployed
        # beyond 150 um has had time to matter
        config = SystemConfig(classes=(CLS,), exclusion_radius=30.0)
        shell = SystemConfig(classes=(CLS,), exclusion_radius=150.0)
        sim_inner = sim_config(window_radius=150.0, trials=1)
        sim_outer = sim_config(window_radius=300.0, trials=1)

        extra = 0
        trials = 300
        for k in range(trials):
            inner = sample_deployment(config, sim_inner, RngStream(61, k))
            outer = sample_deployment(shell, sim_outer, RngStream(62, k))
            merged = Deployment(
                tuple(
                    np.concatenate([a, b], axis=0)
                    for a, b in zip(inner.positions_by_class, outer.positions_by_class)
                )
            )
            small = run_trial(config, sim_inner, RngStream(63, k), deployment=inner)
            big = run_trial(config, sim_inner, RngStream(63, k), deployment=merged)
            if small.detected:
                assert big.detected
                assert big.first_detection_time <= small.first_detection_time + 1e-12
            if big.detected and not small.detected:
                extra += 1
        assert extra / trials <= 0.01


class TestFirstDetectionTimes:
    def test_matches_full_estimate_exactly(self):
        # the early-stopping path must reproduce the plain kernel's first hits
        sim = sim_config(trials=150, time_step=1e-3)
        times = first_detection_times(SWARM, sim)
        est = estimate_curves(SWARM, sim)
        for j, t in enumerate(sim.t_grid):
            assert np.mean(times <= t + 1e-12) == est.p_hat[j]

    def test_undetected_trials_are_infinite(self):
        config = SystemConfig(
            classes=(NmClass(3.0, 100.0, 1e-5),),
            exclusion_radius=30.0,
            single_nm_distance=140.0,
        )
        sim = sim_config(horizon=0.5, t_grid=(0.5,), trials=50)
        times = first_detection_times(config, sim)
        assert times.shape == (50,)
        assert np.all(np.isinf(times))


class TestDetectorCounts:
    def test_counts_are_cumulative_integers(self):
        sim = sim_config(trials=120)
        counts = detector_counts(SWARM, sim)
        assert counts.shape == (120, 3)
        assert counts.dtype.kind == "i"
        assert np.all(counts >= 0)
        assert np.all(np.diff(counts, axis=1) >= 0)

    def test_mean_tracks_expected_count(self):
        sim = sim_config(trials=600, time_step=2e-4, master_seed=17)
        counts = detector_counts(SWARM, sim)
        want = kappa(10.0, CLS, 30.0)
        got = counts[:, -1].mean()
        se = math.sqrt(want / 600)
        assert abs(got - want) < 0.03 * want + 3 * se


MARKER = MarkerSpec(emission_rate=100.0, diffusion=100.0, threshold=0.002)


class TestSensing:
    def test_zero_margin_reproduces_detection_exactly(self):
        sim = sim_config(trials=150)
        sensed = simulate_sensing(SWARM, sim, 0.0, "within_t")
        plain = estimate_curves(SWARM, sim)
        assert np.array_equal(sensed.p_hat, plain.p_hat)
        assert np.array_equal(sensed.mean_detectors, plain.mean_detectors)

    def test_margin_can_reach_past_the_exclusion_ball(self):
        # NMs deployed inside the sensing region register at once
        d_m = 39.788735772973834
        config = SystemConfig(
            classes=(NmClass(3.0, 100.0, 1e-6),), exclusion_radius=20.0
        )
        sim = sim_config(trials=2000, horizon=0.05, t_grid=(0.05,), master_seed=19)
        est = simulate_sensing(config, sim, d_m, "within_t")
        reach = 3.0 + d_m
        mean = 1e-6 * (4.0 / 3.0) * math.pi * (reach**3 - 20.0**3)
        want = -math.expm1(-mean)
        assert abs(est.p_hat[-1] - want) < 3.0 * est.ci_half_width[-1] + 0.005

    def test_instantaneous_requires_non_degradable(self):
        config = SystemConfig(
            classes=(CLS,),
            exclusion_radius=30.0,
            target=TargetSpec(degradation_rate=0.1),
        )
        with pytest.raises(ValueError):
            simulate_sensing(config, sim_config(), 5.0, "at_t")

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            simulate_sensing(SWARM, sim_config(), 5.0, "sometimes")

    def test_instantaneous_replay_is_exact(self):
        sim = sim_config(trials=150)
        a = simulate_sensing(SWARM, sim, 5.0, "at_t")
        b = simulate_sensing(SWARM, sim, 5.0, "at_t")
        assert np.array_equal(a.p_hat, b.p_hat)

    def test_instantaneous_below_cumulative(self):
        # presence at the instant implies presence at some point before it
        sim = sim_config(trials=800, master_seed=37)
        at = simulate_sensing(SWARM, sim, 10.0, "at_t")
        within = simulate_sensing(SWARM, sim, 10.0, "within_t")
        slack = 2.0 * (at.ci_half_width + within.ci_half_width)
        assert np.all(at.p_hat <= within.p_hat + slack)

    def test_instantaneous_is_not_cumulative(self):
        est = simulate_sensing(SWARM, sim_config(trials=150), 10.0, "at_t")
        assert isinstance(est, McEstimate)
        # no monotonicity requirement: just shape and range, handled by the
        # dataclass itself


class TestThreadCountIndependence:
    def test_results_do_not_depend_on_thread_count(self, tmp_path):
        snippet = """
import numpy as np
from nmdetect.model import NmClass, SimConfig, SystemConfig
from nmdetect.simulator import estimate_curves

config = SystemConfig(classes=(NmClass(3.0, 100.0, 1e-5),), exclusion_radius=30.0)
sim = SimConfig(time_step=1e-3, horizon=5.0, window_radius=150.0, trials=120,
                master_seed=7, t_grid=(1.0, 5.0))
est = estimate_curves(config, sim)
print(repr(est.p_hat.tolist()), repr(est.mean_detectors.tolist()))
"""
        outputs = []
        for threads in ("1", "2"):
            env = dict(os.environ, NMDETECT_THREADS=threads)
            proc = subprocess.run(
                [sys.executable, "-c", snippet],
                capture_output=True,
                text=True,
                env=env,
                timeout=300,
            )
            assert proc.returncode == 0, proc.stderr
            outputs.append(proc.stdout)
        assert outputs[0] == outputs[1]
