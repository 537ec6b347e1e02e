"""
Tests for speed, length/direction and edge-count estimation.

Synthetic segments use the noiseless relations between an edge (λ, ξ), a
sensor direction θ in (ξ, ξ + π) and speed v:

    l_d = λ sin(θ - ξ) / (v |sin θ|)        s_d = -sin ξ / sin(θ - ξ)
"""
import math

import numpy as np
from django.test import SimpleTestCase

from api.services.clustering import cluster_1d, gap_split
from api.services.errors import (
    ConfigurationError, DegenerateEstimateError, InvalidExpectationError,
    InvalidSpeedError, NoDetectionError,
)
from api.services.estimator import (
    ConnectivityRecord, EdgeEstimate, EstimateSource, EstimatorParams, PsiLabel, PsiSet, adopt_estimates,
    classify_segments, connectivity, consistency_test, estimate_edge_count,
    estimate_parallel_edges, estimate_speed, expected_nd, expected_nonzero_detectors,
    length_error_sensitivity, psi_label, rescue_counts, support_assignment, two_pair_solve,
)
from api.services.extraction import (
    BoundaryEvent, ConsecutivePair, DetectionSegment, PairOrder, Vertex,
)
from api.services.geometry import angle_distance
from api.services.simulation import DeploymentInfo

DEPLOYMENT = DeploymentInfo(omega_width=5000.0, omega_height=300.0, n_s=2000, r_max=100.0)


def observe(lam, xi, theta, v=1.0):
    """(l_d, s_d) of a noiseless whole-edge detection"""
    l_d = lam * math.sin(theta - xi) / (v * abs(math.sin(theta)))
    s_d = -math.sin(xi) / math.sin(theta - xi)
    return l_d, s_d


def segment(sensor_id, l_d, s_d, index=0, forced_zero=False,
            start=BoundaryEvent.APPEAR, end=BoundaryEvent.DISAPPEAR):
    return DetectionSegment(
        sensor_id=sensor_id, index=index, t_s=0.0, t_e=l_d, r_s=50.0, r_e=50.0 + s_d * l_d,
        start_event=start, end_event=end, s_d=s_d, forced_zero=forced_zero,
    )


def same_side_cases(rng, count, lam_range=(10.0, 150.0)):
    """Random edges seen by two sensors on the same side of the trajectory"""
    cases = []
    while len(cases) < count:
        lam = rng.uniform(*lam_range)
        xi = rng.uniform(0.0, 2 * math.pi)
        v = rng.uniform(0.5, 3.0)
        t1, t2 = xi + rng.uniform(0.0, math.pi, 2)
        if abs(math.sin(xi)) < 0.1 or np.sign(math.sin(t1)) != np.sign(math.sin(t2)):
            continue
        if min(abs(math.sin(t1)), abs(math.sin(t2)), math.sin(t1 - xi), math.sin(t2 - xi)) < 0.1:
            continue
        l1, s1 = observe(lam, xi, t1, v)
        l2, s2 = observe(lam, xi, t2, v)
        if abs(l1 - l2) <= 0.1 * max(l1, l2):
            continue
        cases.append((lam, xi, v, (l1, s1), (l2, s2)))
    return cases


class SpeedTestCase(SimpleTestCase):

    def test_speed_inverts_expected_count(self):
        for v in (0.5, 1.0, 2.5):
            n_r = expected_nonzero_detectors(v, 5000.0, DEPLOYMENT)
            self.assertAlmostEqual(estimate_speed(n_r, 5000.0, DEPLOYMENT), v)

    def test_expected_count_for_default_field(self):
        self.assertAlmostEqual(expected_nonzero_detectors(1.0, 5000.0, DEPLOYMENT), 424.413, places=2)

    def test_no_detection_window(self):
        with self.assertRaises(NoDetectionError):
            estimate_speed(10, 0.0, DEPLOYMENT)


class TwoPairTestCase(SimpleTestCase):

    def test_recovers_length_and_direction(self):
        rng = np.random.default_rng(20240917)
        for lam, xi, v, first, second in same_side_cases(rng, 10_000, lam_range=(1.0, 200.0)):
            sol = two_pair_solve(first, second, v, eps_l=0.05)
            self.assertIsNotNone(sol)
            self.assertAlmostEqual(sol.lambda_tilde / lam, 1.0, delta=1e-9)
            self.assertLess(min(angle_distance(xi, c) for c in sol.xi_candidates), 1e-9)

    def test_equal_durations_degenerate(self):
        self.assertIsNone(two_pair_solve((10.0, 0.5), (10.2, -0.3), 1.0, eps_l=0.05))

    def test_needs_positive_speed(self):
        with self.assertRaises(InvalidSpeedError):
            two_pair_solve((10.0, 0.5), (20.0, -0.3), 0.0)

    def test_mirror_candidates(self):
        l1, s1 = observe(80.0, 2.0, 2.3)
        l2, s2 = observe(80.0, 2.0, 2.8)
        sol = two_pair_solve((l1, s1), (l2, s2), 1.0)
        a, b = sol.xi_candidates
        # The two candidates are mirror images about the vertical
        self.assertLess(angle_distance(a + b, math.pi), 1e-9)


class ConsistencyTestCase(SimpleTestCase):

    def test_true_edge_is_consistent(self):
        rng = np.random.default_rng(5)
        for lam, xi, v, first, second in same_side_cases(rng, 50):
            for method in ('mu', 'xi'):
                self.assertTrue(consistency_test(first, lam, xi, v, method=method))
                self.assertTrue(consistency_test(second, lam, xi, v, method=method))

    def test_wrong_slope_sign_rejected(self):
        l_d, s_d = observe(80.0, 2.0, 2.5)
        self.assertTrue(consistency_test((l_d, s_d), 80.0, 2.0, 1.0))
        self.assertFalse(consistency_test((l_d, -s_d), 80.0, 2.0, 1.0))

    def test_length_outside_band_rejected(self):
        l_d, s_d = observe(80.0, 2.0, 2.5)
        self.assertFalse(consistency_test((l_d, s_d), 160.0, 2.0, 1.0, method='xi', xi_tol=0.01))


class ExpectationTestCase(SimpleTestCase):

    def test_horizontal_edge_expectation(self):
        self.assertAlmostEqual(expected_nd(86.6, 0.0, 1.0, 5000.0, DEPLOYMENT), 212.2066, places=3)

    def test_expectation_falls_with_height(self):
        values = [expected_nd(lam, math.pi / 2, 1.0, 5000.0, DEPLOYMENT) for lam in (10.0, 40.0, 80.0)]
        self.assertTrue(values[0] > values[1] > values[2] > 0)

    def test_edge_taller_than_range_is_never_whole(self):
        self.assertEqual(expected_nd(150.0, math.pi / 2, 1.0, 5000.0, DEPLOYMENT), 0.0)

    def test_edge_count_rounds_half_up(self):
        self.assertEqual(estimate_edge_count(10, 4.0), (2.5, 3))
        self.assertEqual(estimate_edge_count(9, 4.0)[1], 2)

    def test_edge_count_needs_positive_expectation(self):
        with self.assertRaises(InvalidExpectationError):
            estimate_edge_count(5, 0.0)


class AdoptionTestCase(SimpleTestCase):
    """Two edges seen from below; 60 detections of the long one, 20 of the short one"""

    def setUp(self):
        rng = np.random.default_rng(7)
        edges = [(100.0, 2.0, (3.3, 5.0), 60), (30.0, 2.8, (3.3, 5.5), 20)]
        members = []
        for edge_id, (lam, xi, (lo, hi), count) in enumerate(edges):
            for k, theta in enumerate(rng.uniform(lo, hi, count)):
                l_d, s_d = observe(lam, xi, theta)
                members.append(segment(100 * edge_id + k, l_d, s_d))
        self.psi = PsiSet(PsiLabel.NEAR_MINUS_ONE, tuple(members))
        self.long_keys = {(k, 0) for k in range(60)}

    def adopt(self, **params):
        return adopt_estimates(
            [self.psi], 1.0, DEPLOYMENT, 5000.0, EstimatorParams(**params), np.random.default_rng(1),
        )

    def test_adopts_each_edge_once(self):
        estimates = self.adopt()
        self.assertEqual(len(estimates), 2)
        self.assertAlmostEqual(estimates[0].lambda_hat / 100.0, 1.0, delta=1e-6)
        self.assertAlmostEqual(estimates[1].lambda_hat / 30.0, 1.0, delta=1e-6)
        self.assertLess(min(angle_distance(2.0, c) for c in estimates[0].xi_candidates), 1e-6)
        self.assertTrue(self.long_keys <= set(estimates[0].support))
        self.assertFalse(set(estimates[0].support) & set(estimates[1].support))
        self.assertEqual([e.index for e in estimates], [0, 1])
        self.assertTrue(all(e.source == EstimateSource.GENERAL for e in estimates))

    def test_pairs_redrawn_after_each_adoption(self):
        # Eight pairs out of 3160 rarely join two short-edge detections up front
        estimates = self.adopt(max_pairs=8)
        lengths = sorted(round(e.lambda_hat, 6) for e in estimates)
        self.assertEqual(lengths, [30.0, 100.0])

    def test_support_below_minimum_stops(self):
        estimates = self.adopt(min_support_abs=25)
        self.assertEqual(len(estimates), 1)

    def test_single_segment_has_no_pair(self):
        psi = PsiSet(PsiLabel.NEAR_MINUS_ONE, self.psi.members[:1])
        self.assertEqual(adopt_estimates([psi], 1.0, DEPLOYMENT, 5000.0), [])

    def test_needs_positive_speed(self):
        with self.assertRaises(InvalidSpeedError):
            adopt_estimates([self.psi], 0.0, DEPLOYMENT, 5000.0)


class SensitivityTestCase(SimpleTestCase):

    def test_matches_hand_derivative(self):
        # λ² = 3.375 and d(λ²)/dl1 = 3.9375 for this pair
        value = length_error_sensitivity((1.0, 0.5), (3.0, 0.0), math.sqrt(3.375), 1.0)
        self.assertAlmostEqual(value, 3.9375 / (2 * math.sqrt(3.375)), places=9)

    def test_matches_finite_difference(self):
        cases = [(60.0, 2.0, 2.3, 2.9), (40.0, 4.0, 4.5, 5.5), (100.0, 1.0, 1.5, 2.5)]
        for lam, xi, t1, t2 in cases:
            l1, s1 = observe(lam, xi, t1)
            second = observe(lam, xi, t2)
            v = 1.0
            h = 1e-5 * l1
            up = two_pair_solve((l1 + h, s1), second, v, eps_l=0.0)
            down = two_pair_solve((l1 - h, s1), second, v, eps_l=0.0)
            numeric = (up.lambda_tilde - down.lambda_tilde) / (2 * h)
            analytic = length_error_sensitivity((l1, s1), second, None, v)
            self.assertAlmostEqual(analytic, numeric, delta=1e-4 * max(1.0, abs(numeric)))

    def test_equal_durations_undefined(self):
        with self.assertRaises(DegenerateEstimateError):
            length_error_sensitivity((2.0, 0.5), (2.0, 0.1), 10.0, 1.0)


class ClassificationTestCase(SimpleTestCase):

    def test_labels(self):
        params = EstimatorParams()
        cases = [
            (0.0, True, PsiLabel.ZERO),
            (0.2, False, PsiLabel.SMALL_POS),
            (-0.2, False, PsiLabel.SMALL_NEG),
            (1.0, False, PsiLabel.NEAR_PLUS_ONE),
            (-1.0, False, PsiLabel.NEAR_MINUS_ONE),
            (5.0, False, PsiLabel.LARGE_POS),
            (-5.0, False, PsiLabel.LARGE_NEG),
        ]
        for s_d, forced, expected in cases:
            self.assertEqual(psi_label(segment(0, 10.0, s_d, forced_zero=forced), params), expected)

    def test_invalid_segments_skipped(self):
        segs = [
            segment(0, 10.0, 0.2),
            segment(1, 10.0, 0.2, start=BoundaryEvent.TRACE_EDGE),
        ]
        sets = classify_segments(segs)
        self.assertEqual(sum(len(s) for s in sets), 1)

    def test_unfinalized_rejected(self):
        seg = DetectionSegment(0, 0, 0.0, 5.0, 10.0, 12.0, BoundaryEvent.APPEAR, BoundaryEvent.DISAPPEAR)
        with self.assertRaises(ValueError):
            classify_segments([seg])

    def test_steep_sets_split_by_length(self):
        segs = [segment(i, 2.0, 10.0) for i in range(20)] + [segment(20 + i, 8.0, 10.0) for i in range(20)]
        sets = [s for s in classify_segments(segs) if s.label == PsiLabel.LARGE_POS]
        self.assertEqual(len(sets), 2)
        self.assertEqual(sorted(len(s) for s in sets), [20, 20])

    def test_params_validation(self):
        with self.assertRaises(ConfigurationError):
            EstimatorParams(s_small=3.0, s_large=1.0)
        with self.assertRaises(ConfigurationError):
            EstimatorParams(band_low=1.1)
        with self.assertRaises(ConfigurationError):
            EstimatorParams(consistency_method='angle')


class ParallelEdgeTestCase(SimpleTestCase):

    def test_two_horizontal_lengths(self):
        members = [segment(i, 50.0, 0.0, forced_zero=True) for i in range(20)]
        members += [segment(100 + i, 100.0, 0.0, forced_zero=True) for i in range(20)]
        zero_set = PsiSet(PsiLabel.ZERO, tuple(members))
        estimates = estimate_parallel_edges(zero_set, 1.0, DEPLOYMENT, 5000.0)
        self.assertEqual(len(estimates), 2)
        lengths = sorted(e.lambda_hat for e in estimates)
        self.assertAlmostEqual(lengths[0], 50.0)
        self.assertAlmostEqual(lengths[1], 100.0)
        for est in estimates:
            self.assertEqual(est.xi_candidates, (0.0, math.pi))
            self.assertEqual(est.source, EstimateSource.PARALLEL)
            self.assertEqual(est.support_count, 20)

    def test_empty_set(self):
        self.assertEqual(estimate_parallel_edges(None, 1.0, DEPLOYMENT, 5000.0), [])


class ConnectivityTestCase(SimpleTestCase):

    def setUp(self):
        self.pairs = []
        for sensor in range(30):
            first = segment(sensor, 10.0, 0.5, index=0, end=BoundaryEvent.SLOPE_CHANGE)
            second = segment(sensor, 10.0, -0.5, index=1, start=BoundaryEvent.SLOPE_CHANGE)
            vertex = Vertex.CONCAVE if sensor < 20 else Vertex.CONVEX
            self.pairs.append(ConsecutivePair(first, second, vertex, PairOrder.FIRST_NEARER_HEAD))
        self.estimates = [
            EdgeEstimate(0, EstimateSource.GENERAL, 20.0, (1.0, 2.1), 0.4, 0,
                         support=tuple((s, 0) for s in range(30)), psi='NearPlusOne'),
            EdgeEstimate(1, EstimateSource.GENERAL, 30.0, (4.0, 5.4), 1.1, 1,
                         support=tuple((s, 1) for s in range(30)), psi='NearMinusOne'),
        ]

    def test_record_counts_and_majority(self):
        records = connectivity(self.pairs, support_assignment(self.estimates), self.estimates, n_c_min=30)
        self.assertEqual(len(records), 1)
        rec = records[0]
        self.assertEqual((rec.head, rec.tail), (0, 1))
        self.assertEqual(rec.n_c, 30)
        self.assertEqual(rec.concave_count, 20)
        self.assertEqual(rec.vertex_majority, Vertex.CONCAVE)
        self.assertTrue(rec.significant)
        self.assertEqual(rec.head_set, 'NearPlusOne')

    def test_below_threshold_not_significant(self):
        records = connectivity(self.pairs, support_assignment(self.estimates), self.estimates, n_c_min=31)
        self.assertFalse(records[0].significant)

    def test_unassigned_pairs_ignored(self):
        self.assertEqual(connectivity(self.pairs, {}, self.estimates), [])

    def test_rescue_linked_zero_count(self):
        record = ConnectivityRecord(0, 1, '', '', 30, 0, Vertex.CONVEX, True)
        rescued = rescue_counts(self.estimates, [record])
        self.assertEqual(rescued[0].n_e_rounded, 1)
        self.assertTrue(rescued[0].rescued)
        self.assertFalse(rescued[1].rescued)

    def test_no_rescue_without_significant_link(self):
        record = ConnectivityRecord(0, 1, '', '', 5, 0, Vertex.CONVEX, False)
        self.assertEqual(rescue_counts(self.estimates, [record])[0].n_e_rounded, 0)


class ClusteringTestCase(SimpleTestCase):

    def test_two_groups(self):
        rng = np.random.default_rng(1)
        values = np.concatenate([rng.normal(20.0, 0.3, 40), rng.normal(60.0, 0.3, 40)])
        result = cluster_1d(values, 1.0)
        self.assertEqual(result.n_clusters, 2)
        self.assertAlmostEqual(result.means[0], 20.0, delta=0.5)
        self.assertAlmostEqual(result.means[1], 60.0, delta=0.5)
        self.assertEqual(sorted(result.members(0).tolist()), list(range(40)))

    def test_narrow_spread_is_one_cluster(self):
        result = cluster_1d([10.0, 10.5, 11.0, 10.2], 1.0)
        self.assertEqual(result.n_clusters, 1)
        self.assertEqual(result.method, 'single')

    def test_empty_input(self):
        result = cluster_1d([], 1.0)
        self.assertEqual(result.n_clusters, 0)

    def test_gap_split(self):
        labels = gap_split(np.array([5.0, 1.0, 1.2, 5.1, 9.0]), 0.1)
        self.assertEqual(labels.tolist(), [1, 0, 0, 1, 2])
