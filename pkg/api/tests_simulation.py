"""
Tests for the synthetic field: deployment, target motion, range traces and loss.
"""
import math

import numpy as np
from django.test import SimpleTestCase, tag

from api.services.errors import ConfigurationError
from api.services.estimator import estimate_speed
from api.services.extraction import count_nonzero_detectors
from api.services.presets import get_preset
from api.services.seeds import PUBLISHED_SEEDS, run_seed, stream
from api.services.simulation import (
    RangeTrace, SensorPose, SimConfig, TargetMotion, check_boundary_ratios,
    deploy_sensors, inject_loss, simulate, simulate_traces,
)


class SimConfigTestCase(SimpleTestCase):

    def test_defaults_are_valid(self):
        cfg = SimConfig()
        self.assertEqual(cfg.area, 1.5e6)
        self.assertEqual(cfg.deployment.n_s, 2000)

    def test_invalid_values_collected(self):
        with self.assertRaises(ConfigurationError) as ctx:
            SimConfig(v=0.0, p_b=1.5)
        message = str(ctx.exception)
        self.assertIn('v must be positive', message)
        self.assertIn('p_b', message)

    def test_offset_must_stay_inside_omega(self):
        with self.assertRaises(ConfigurationError):
            SimConfig(omega_height=300.0, y_offset=150.0)


class TargetMotionTestCase(SimpleTestCase):

    def test_triangle_trajectory(self):
        cfg = SimConfig(omega_width=1000.0, omega_height=300.0)
        motion = TargetMotion.for_polygon(get_preset('triangle'), cfg)
        perimeter = 150 + 50 * math.sqrt(3)
        self.assertAlmostEqual(motion.start_x, -(perimeter + cfg.r_max))
        # Outline spans y in [0, 50]; its middle rides on H/2
        self.assertAlmostEqual(motion.y, 125.0)
        self.assertGreaterEqual(motion.anchor_x(motion.n_samples - 1), cfg.omega_width + perimeter + cfg.r_max)


class TraceTestCase(SimpleTestCase):
    """One sensor placed by hand under the trajectory"""

    def setUp(self):
        self.cfg = SimConfig(omega_width=1000.0, omega_height=300.0, r_max=100.0, v=1.0, dt=1.0)
        self.sensor = SensorPose(0, 500.0, 100.0, math.pi / 2)
        self.result = simulate_traces(get_preset('triangle'), self.cfg, [self.sensor])

    def test_constant_range_under_bottom_edge(self):
        trace = self.result.traces[0]
        hits = trace.values[~np.isnan(trace.values)]
        np.testing.assert_allclose(hits, 25.0, atol=1e-9)
        self.assertGreaterEqual(hits.size, 86)
        self.assertLessEqual(hits.size, 88)

    def test_detection_window_times(self):
        trace = self.result.traces[0]
        times = trace.times[~np.isnan(trace.values)]
        # Bottom edge spans [x, x + 50√3]; the sensor sits at x = 500
        start_x = self.result.motion.start_x
        self.assertAlmostEqual(times[0], math.ceil(500.0 - 50 * math.sqrt(3) - start_x - 1e-9), delta=1.0)
        self.assertAlmostEqual(times[-1], math.floor(500.0 - start_x), delta=1.0)
        self.assertTrue(self.result.detected)
        self.assertAlmostEqual(self.result.m_t, times[-1] - times[0])

    def test_sensor_facing_away_never_detects(self):
        sensor = SensorPose(1, 500.0, 100.0, 3 * math.pi / 2)
        result = simulate_traces(get_preset('triangle'), self.cfg, [sensor])
        self.assertFalse(result.detected)
        self.assertEqual(result.m_t, 0.0)
        self.assertTrue(np.isnan(result.traces[0].values).all())

    def test_sensor_inside_swept_band_reads_zero(self):
        sensor = SensorPose(2, 500.0, 140.0, 0.0)
        result = simulate_traces(get_preset('triangle'), self.cfg, [sensor])
        values = result.traces[0].values
        self.assertTrue((values[~np.isnan(values)] == 0.0).any())
        self.assertEqual(count_nonzero_detectors(result.traces), 0)

    def test_samples_round_trip(self):
        trace = RangeTrace.from_samples(3, 10.0, 0.5, [None, 4.0, 'lost', 3.5, None])
        self.assertEqual(trace.samples(), [None, 4.0, 'lost', 3.5, None])
        np.testing.assert_allclose(trace.times, [10.0, 10.5, 11.0, 11.5, 12.0])
        self.assertEqual(trace.detected.tolist(), [False, True, False, True, False])

    def test_empty_trace_rejected(self):
        with self.assertRaises(ValueError):
            RangeTrace(0, 0.0, 1.0, np.array([]))


class DeploymentTestCase(SimpleTestCase):

    def test_same_seed_same_field(self):
        cfg = SimConfig(n_s=50, seed=7)
        self.assertEqual(deploy_sensors(cfg), deploy_sensors(cfg))
        other = deploy_sensors(cfg.with_updates(seed=8))
        self.assertNotEqual(deploy_sensors(cfg), other)

    def test_sensors_inside_omega(self):
        cfg = SimConfig(n_s=500, seed=3)
        sensors = deploy_sensors(cfg)
        self.assertEqual([s.sensor_id for s in sensors], list(range(500)))
        for s in sensors:
            self.assertTrue(0.0 <= s.x <= cfg.omega_width)
            self.assertTrue(0.0 <= s.y <= cfg.omega_height)
            self.assertTrue(0.0 <= s.theta < 2 * math.pi)

    def test_run_seeds_differ_per_run(self):
        seeds = {run_seed(PUBLISHED_SEEDS[0], i) for i in range(20)}
        self.assertEqual(len(seeds), 20)
        self.assertEqual(run_seed(5, 3), run_seed(5, 3))

    def test_unknown_stream_purpose(self):
        with self.assertRaises(KeyError):
            stream(1, 'weather')

    def test_boundary_ratios(self):
        ratios = check_boundary_ratios(get_preset('triangle'), SimConfig())
        self.assertAlmostEqual(ratios['omega_over_rmax_sq'], 150.0)
        self.assertGreater(ratios['omega_over_target'], 10)


class LossTestCase(SimpleTestCase):

    def setUp(self):
        self.traces = [
            RangeTrace.from_samples(0, 0.0, 1.0, [None, 5.0, 4.0, 3.0, None]),
            RangeTrace.from_samples(1, 0.0, 1.0, [None, None]),
        ]

    def test_zero_probability_keeps_traces(self):
        out = inject_loss(self.traces, 0.0, stream(1, 'loss'))
        self.assertFalse(out[0].lost.any())

    def test_certain_loss_marks_only_detections(self):
        out = inject_loss(self.traces, 1.0, stream(1, 'loss'))
        self.assertEqual(out[0].lost.tolist(), [False, True, True, True, False])
        self.assertFalse(out[1].lost.any())

    def test_loss_is_reproducible(self):
        long = [RangeTrace(i, 0.0, 1.0, np.arange(1.0, 101.0)) for i in range(5)]
        a = inject_loss(long, 0.3, stream(11, 'loss'))
        b = inject_loss(long, 0.3, stream(11, 'loss'))
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.lost, y.lost)
        fraction = np.mean([t.lost.mean() for t in a])
        self.assertAlmostEqual(fraction, 0.3, delta=0.1)

    def test_invalid_probability(self):
        with self.assertRaises(ConfigurationError):
            inject_loss(self.traces, -0.1, stream(1, 'loss'))


@tag('slow')
class SpeedStatisticsTestCase(SimpleTestCase):
    """Speed estimate and nonzero-detector count over seeded triangle runs"""

    def test_speed_estimate_close_to_truth(self):
        cfg = SimConfig()
        triangle = get_preset('triangle')
        expected_nr = 2 * cfg.omega_width * cfg.n_s * cfg.r_max / (math.pi * cfg.area)
        sigma = math.sqrt(expected_nr)
        speeds = []
        for seed in PUBLISHED_SEEDS:
            result = simulate(triangle, cfg.with_updates(seed=seed))
            n_r = count_nonzero_detectors(result.traces)
            self.assertLess(abs(n_r - expected_nr), 3 * sigma, f"seed {seed}: n_r={n_r}")
            speeds.append(estimate_speed(n_r, result.m_t, cfg.deployment))
        self.assertAlmostEqual(float(np.mean(speeds)), cfg.v, delta=0.05 * cfg.v)

    def test_simulation_is_deterministic(self):
        cfg = SimConfig(n_s=300, seed=PUBLISHED_SEEDS[1], p_b=0.1)
        a = simulate(get_preset('triangle'), cfg)
        b = simulate(get_preset('triangle'), cfg)
        self.assertEqual(a.m_t, b.m_t)
        for x, y in zip(a.traces, b.traces):
            self.assertEqual(x.samples(), y.samples())
