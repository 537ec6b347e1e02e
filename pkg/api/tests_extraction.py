"""
Tests for trace segmentation.

The small traces below are worked out by hand with dt = 1, t0 = 0 and
r_max = 100: endpoints are centered half a sample outside the first and last
samples, knees sit where the neighbouring lines meet.
"""
import math

import numpy as np
from django.test import SimpleTestCase, tag

from api.services.errors import ConfigurationError, InvalidSpeedError
from api.services.estimator import expected_nd
from api.services.extraction import (
    BoundaryEvent, DetectionSegment, ExtractionParams, Vertex, apply_sd_noise,
    count_nonzero_detectors, extract_segments, finalize_sd, pair_consecutive, segment_trace,
)
from api.services.harness import attribute_segment
from api.services.presets import get_preset
from api.services.seeds import PUBLISHED_SEEDS, stream
from api.services.simulation import RangeTrace, SimConfig, simulate

# no detection
N = None


def trace(samples, sensor_id=0):
    return RangeTrace.from_samples(sensor_id, 0.0, 1.0, samples)


class SegmentTraceTestCase(SimpleTestCase):

    def test_single_straight_run(self):
        segments, discarded = segment_trace(trace([N, N, 50, 49, 48, 47, 46, 45, N, N]))
        self.assertEqual(discarded, 0)
        self.assertEqual(len(segments), 1)
        seg = segments[0]
        self.assertAlmostEqual(seg.t_s, 1.5)
        self.assertAlmostEqual(seg.r_s, 50.5)
        self.assertAlmostEqual(seg.t_e, 7.5)
        self.assertAlmostEqual(seg.r_e, 44.5)
        self.assertAlmostEqual(seg.l_d, 6.0)
        self.assertAlmostEqual(seg.raw_slope, -1.0)
        self.assertEqual(seg.start_event, BoundaryEvent.APPEAR)
        self.assertEqual(seg.end_event, BoundaryEvent.DISAPPEAR)
        self.assertTrue(seg.valid_whole_edge)
        self.assertEqual(seg.n_samples, 6)
        self.assertAlmostEqual(seg.max_step, 1.0)

    def test_slope_change_splits_at_knee(self):
        segments, _ = segment_trace(trace([N, 40, 41, 42, 43, 44, 42, 40, 38, 36, N]))
        self.assertEqual(len(segments), 2)
        first, second = segments
        self.assertEqual(first.start_event, BoundaryEvent.APPEAR)
        self.assertEqual(first.end_event, BoundaryEvent.SLOPE_CHANGE)
        self.assertAlmostEqual(first.t_s, 0.5)
        self.assertAlmostEqual(first.r_s, 39.5)
        self.assertAlmostEqual(first.t_e, 5.0)
        self.assertAlmostEqual(first.r_e, 44.0)
        self.assertAlmostEqual(first.raw_slope, 1.0)
        self.assertEqual(second.start_event, BoundaryEvent.SLOPE_CHANGE)
        self.assertEqual(second.end_event, BoundaryEvent.DISAPPEAR)
        self.assertAlmostEqual(second.t_s, 5.0)
        self.assertAlmostEqual(second.t_e, 9.5)
        self.assertAlmostEqual(second.r_e, 35.0)
        self.assertAlmostEqual(second.raw_slope, -2.0)
        self.assertTrue(first.valid_whole_edge and second.valid_whole_edge)

    def test_jump_down_cuts_run(self):
        segments, _ = segment_trace(trace([N, 80, 79, 78, 77, 30, 29, 28, 27, N]))
        self.assertEqual(len(segments), 2)
        near, far = segments
        self.assertEqual(near.end_event, BoundaryEvent.JUMP_DOWN)
        self.assertFalse(near.valid_whole_edge)
        self.assertEqual(far.start_event, BoundaryEvent.JUMP_DOWN)
        self.assertEqual(far.end_event, BoundaryEvent.DISAPPEAR)
        self.assertTrue(far.valid_whole_edge)

    def test_entry_at_max_range_is_trace_edge(self):
        segments, _ = segment_trace(trace([N, 100, 99, 98, 97, N]))
        self.assertEqual(segments[0].start_event, BoundaryEvent.TRACE_EDGE)
        self.assertFalse(segments[0].valid_whole_edge)
        self.assertLessEqual(segments[0].r_s, 100.0)

    def test_run_touching_trace_bounds(self):
        segments, _ = segment_trace(trace([10, 11, 12, 13]))
        self.assertEqual(segments[0].start_event, BoundaryEvent.TRACE_EDGE)
        self.assertEqual(segments[0].end_event, BoundaryEvent.TRACE_EDGE)

    def test_lost_sample_invalidates_neighbours(self):
        samples = [N, 50, 49, 'lost', 47, 46, 45, N]
        segments, discarded = segment_trace(trace(samples))
        self.assertEqual(discarded, 1)
        self.assertEqual(len(segments), 1)
        self.assertEqual(segments[0].start_event, BoundaryEvent.LOST_GAP)
        self.assertFalse(segments[0].valid_whole_edge)

    def test_lost_sample_split_policy(self):
        samples = [N, 50, 49, 'lost', 47, 46, 45, N]
        segments, discarded = segment_trace(trace(samples), ExtractionParams(lost_policy='split'))
        self.assertEqual(discarded, 1)
        self.assertEqual(segments[0].start_event, BoundaryEvent.APPEAR)
        self.assertTrue(segments[0].valid_whole_edge)

    def test_short_run_discarded(self):
        segments, discarded = segment_trace(trace([N, 30, 29, N]))
        self.assertEqual(segments, [])
        self.assertEqual(discarded, 1)

    def test_least_squares_slope(self):
        params = ExtractionParams(slope_method='least_squares')
        segments, _ = segment_trace(trace([N, 10, 11, 12, 13, N]), params)
        self.assertAlmostEqual(segments[0].raw_slope, 1.0)

    def test_no_centering(self):
        params = ExtractionParams(endpoint_centering=False)
        segments, _ = segment_trace(trace([N, N, 50, 49, 48, 47, 46, 45, N, N]), params)
        self.assertAlmostEqual(segments[0].t_s, 2.0)
        self.assertAlmostEqual(segments[0].l_d, 5.0)

    def test_extract_segments_sums_over_traces(self):
        traces = [trace([N, 50, 49, 48, N], 0), trace([N, 30, N], 1), trace([N, N], 2)]
        segments, discarded = extract_segments(traces)
        self.assertEqual(len(segments), 1)
        self.assertEqual(segments[0].sensor_id, 0)
        self.assertEqual(discarded, 1)


class ParamsTestCase(SimpleTestCase):

    def test_invalid_policy(self):
        with self.assertRaises(ConfigurationError):
            ExtractionParams(lost_policy='ignore')

    def test_invalid_slope_method(self):
        with self.assertRaises(ConfigurationError):
            ExtractionParams(slope_method='median')

    def test_min_samples_floor(self):
        with self.assertRaises(ConfigurationError):
            ExtractionParams(min_samples=1)


class SlopeTestCase(SimpleTestCase):

    def setUp(self):
        self.segment = segment_trace(trace([N, N, 50, 49, 48, 47, 46, 45, N, N]))[0][0]

    def test_finalize_scales_by_speed(self):
        seg = finalize_sd(self.segment, 2.0)
        self.assertAlmostEqual(seg.s_d, -0.5)
        self.assertFalse(seg.forced_zero)

    def test_flat_run_forced_to_zero(self):
        flat = segment_trace(trace([N, 20, 20, 20, 20, N]))[0][0]
        seg = finalize_sd(flat, 1.0)
        self.assertEqual(seg.s_d, 0.0)
        self.assertTrue(seg.forced_zero)

    def test_finalize_needs_positive_speed(self):
        with self.assertRaises(InvalidSpeedError):
            finalize_sd(self.segment, 0.0)

    def test_noise_leaves_forced_zero(self):
        flat = finalize_sd(segment_trace(trace([N, 20, 20, 20, 20, N]))[0][0], 1.0)
        sloped = finalize_sd(self.segment, 1.0)
        out = apply_sd_noise([flat, sloped], 0.5, stream(3, 'noise'))
        self.assertEqual(out[0].s_d, 0.0)
        self.assertNotEqual(out[1].s_d, sloped.s_d)
        again = apply_sd_noise([flat, sloped], 0.5, stream(3, 'noise'))
        self.assertEqual(out[1].s_d, again[1].s_d)

    def test_noise_rejects_negative_sigma(self):
        with self.assertRaises(ConfigurationError):
            apply_sd_noise([finalize_sd(self.segment, 1.0)], -1.0, stream(3, 'noise'))

    def test_segment_dict_round_trip(self):
        seg = finalize_sd(self.segment, 1.0)
        again = DetectionSegment.from_dict(seg.to_dict())
        self.assertEqual(again, seg)


class DetectorCountTestCase(SimpleTestCase):

    def test_zero_samples_excluded(self):
        traces = [
            trace([N, 5, 4, N], 0),
            trace([N, 0, 0, N], 1),
            trace([N, 5, 0, 5, N], 2),
            trace([N, N], 3),
            trace([N, 'lost', N], 4),
        ]
        self.assertEqual(count_nonzero_detectors(traces), 1)


class PairTestCase(SimpleTestCase):

    def test_consecutive_segments_pair_at_knee(self):
        segments, _ = segment_trace(trace([N, 40, 41, 42, 43, 44, 42, 40, 38, 36, N]))
        segments = [finalize_sd(s, 1.0) for s in segments]
        pairs = pair_consecutive(segments, 1.0)
        self.assertEqual(len(pairs), 1)
        self.assertEqual(pairs[0].vertex, Vertex.CONCAVE)
        self.assertIs(pairs[0].head, segments[0])
        reverse = pair_consecutive(segments, 1.0, move_direction=-1)
        self.assertIs(reverse[0].head, segments[1])

    def test_descending_then_ascending_is_convex(self):
        segments, _ = segment_trace(trace([N, 44, 42, 40, 38, 36, 37, 38, 39, 40, N]))
        segments = [finalize_sd(s, 1.0) for s in segments]
        pairs = pair_consecutive(segments, 1.0)
        self.assertEqual(len(pairs), 1)
        self.assertEqual(pairs[0].vertex, Vertex.CONVEX)

    def test_unfinalized_segments_not_paired(self):
        segments, _ = segment_trace(trace([N, 40, 41, 42, 43, 44, 42, 40, 38, 36, N]))
        self.assertEqual(pair_consecutive(segments, 1.0), [])


@tag('slow')
class SimulatedGeometryTestCase(SimpleTestCase):
    """Segments of a noiseless triangle run agree with the edge they came from"""

    def test_duration_and_slope_sign(self):
        polygon = get_preset('triangle')
        cfg = SimConfig(seed=1234)
        result = simulate(polygon, cfg)
        segments, _ = extract_segments(result.traces, ExtractionParams(r_max=cfg.r_max))
        valid = [s for s in segments if s.valid_whole_edge]
        self.assertGreater(len(valid), 50)

        duration_ok = sign_ok = magnitude_ok = checked = 0
        for seg in valid:
            sensor = result.sensors[seg.sensor_id]
            edge_index = attribute_segment(seg, sensor, result.motion, polygon, cfg.r_max)
            if edge_index is None:
                continue
            edge = polygon.edges[edge_index]
            checked += 1
            xi, theta = edge.direction, sensor.theta
            expected = edge.length * math.sin(theta - xi) / (cfg.v * abs(math.sin(theta)))
            if abs(seg.l_d - expected) <= 1.01 * cfg.dt:
                duration_ok += 1
            s_d = seg.raw_slope / cfg.v
            if abs(s_d) >= abs(math.sin(xi)) - 1e-6:
                magnitude_ok += 1
            if s_d * math.sin(xi) <= 1e-6:
                sign_ok += 1

        self.assertGreater(checked, 50)
        self.assertGreaterEqual(duration_ok / checked, 0.95)
        self.assertGreaterEqual(sign_ok / checked, 0.99)
        self.assertGreaterEqual(magnitude_ok / checked, 0.99)


@tag('slow')
class DetectionCountTestCase(SimpleTestCase):
    """Whole-edge detections of a lone edge against their expected count"""

    def test_single_edge_counts_within_three_sigma(self):
        edge = get_preset('single_edge').edges[0]
        cfg = SimConfig()
        # Every sensor of the field is swept once
        expected = expected_nd(edge.length, edge.direction, cfg.v, cfg.omega_width / cfg.v, cfg.deployment)
        self.assertGreater(expected, 100)
        for seed in PUBLISHED_SEEDS:
            result = simulate(get_preset('single_edge'), cfg.with_updates(seed=seed))
            segments, _ = extract_segments(result.traces, ExtractionParams(r_max=cfg.r_max))
            count = sum(1 for seg in segments if seg.valid_whole_edge)
            self.assertLess(abs(count - expected), 3 * math.sqrt(expected), f"seed {seed}: {count} vs {expected:.1f}")
