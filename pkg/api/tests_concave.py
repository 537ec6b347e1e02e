"""
Tests for concave-vertex detection counts.

``f_theta_x`` is checked against direct quadrature: the sensor directions
that still see the current edge whole run from the previous edge's direction
to the current one's plus π, and each contributes max(0, r|sin z| - x).
"""
import math

import numpy as np
from django.test import SimpleTestCase, tag
from scipy.integrate import quad

from api.services.concave import (
    concave_compensation, concave_expectations, expected_nd_concave, f_theta_x, is_concave_pair, zone_of,
)
from api.services.errors import ConvexVertexError, InvalidCaseError
from api.services.estimator import ConnectivityRecord, EdgeEstimate, EstimateSource, expected_nd
from api.services.extraction import ExtractionParams, Vertex, extract_segments
from api.services.harness import attribute_segment
from api.services.pipeline import run_estimation
from api.services.presets import CONCAVE_CORNER_EDGE, get_preset
from api.services.seeds import PUBLISHED_SEEDS
from api.services.simulation import DeploymentInfo, SimConfig, simulate

DEPLOYMENT = DeploymentInfo(omega_width=5000.0, omega_height=300.0, n_s=2000, r_max=100.0)
TWO_PI = 2 * math.pi

ZONE_PAIRS = [
    (1, 1), (1, 2), (1, 3),
    (2, 2), (2, 3), (2, 4),
    (3, 3), (3, 4), (3, 1),
    (4, 4), (4, 1), (4, 2),
]


def reference_f(theta, xi_prev, xi_cur, r):
    x = r * math.sin(theta)
    start = xi_prev % TWO_PI
    width = math.pi - (xi_prev - xi_cur) % TWO_PI
    if width <= 0:
        return 0.0
    stop = start + width
    breaks = [b + k * TWO_PI for k in (0, 1, 2)
              for b in (theta, math.pi - theta, math.pi + theta, TWO_PI - theta)]
    points = sorted(b for b in breaks if start < b < stop)
    value, _ = quad(lambda z: max(0.0, r * abs(math.sin(z)) - x), start, stop, points=points or None, limit=200)
    return value


def zone_sample(rng, zone, theta):
    bounds = {
        1: (-theta, theta),
        2: (theta, math.pi - theta),
        3: (math.pi - theta, math.pi + theta),
        4: (math.pi + theta, TWO_PI - theta),
    }
    lo, hi = bounds[zone]
    margin = 1e-6
    return (rng.uniform(lo + margin, hi - margin)) % TWO_PI


class ZoneTestCase(SimpleTestCase):

    def test_zone_boundaries(self):
        theta = 0.3
        self.assertEqual(zone_of(0.0, theta), 1)
        self.assertEqual(zone_of(TWO_PI - 0.1, theta), 1)
        self.assertEqual(zone_of(math.pi / 2, theta), 2)
        self.assertEqual(zone_of(math.pi, theta), 3)
        self.assertEqual(zone_of(3 * math.pi / 2, theta), 4)

    def test_concave_pair(self):
        # Right turn from up to east at the L-shaped corner
        self.assertTrue(is_concave_pair(math.pi / 2, 0.0))
        self.assertFalse(is_concave_pair(0.0, math.pi / 2))


class FThetaXTestCase(SimpleTestCase):

    def test_known_value(self):
        self.assertAlmostEqual(f_theta_x(0.0, 0.0, math.pi / 2, 0.0, 100.0), 100.0)

    def test_every_zone_pair_matches_quadrature(self):
        rng = np.random.default_rng(20240917)
        r = 100.0
        for zc, zp in ZONE_PAIRS:
            hits = 0
            attempts = 0
            while hits < 100 and attempts < 100000:
                attempts += 1
                theta = rng.uniform(0.05, math.pi / 2 - 0.05)
                cur = zone_sample(rng, zc, theta)
                prev = zone_sample(rng, zp, theta)
                offset = (prev - cur) % TWO_PI
                if not 1e-3 < offset < math.pi - 1e-3:
                    continue
                self.assertEqual((zone_of(cur, theta), zone_of(prev, theta)), (zc, zp))
                expected = reference_f(theta, prev, cur, r)
                got = f_theta_x(theta, r * math.sin(theta), prev, cur, r)
                self.assertAlmostEqual(got, expected, delta=1e-6 * r,
                                       msg=f"zones {(zc, zp)}, theta={theta}, prev={prev}, cur={cur}")
                hits += 1
            self.assertEqual(hits, 100, f"zone pair {(zc, zp)} was not sampled")

    def test_theta_out_of_range(self):
        with self.assertRaises(InvalidCaseError):
            f_theta_x(2.0, 10.0, math.pi / 2, 0.0, 100.0)

    def test_convex_vertex_rejected(self):
        with self.assertRaises(InvalidCaseError):
            f_theta_x(0.1, 10.0, 0.0, math.pi / 2, 100.0)
        with self.assertRaises(ConvexVertexError):
            expected_nd_concave(50.0, math.pi / 2, 0.0, 1.0, 5000.0, DEPLOYMENT)


class CompensationTestCase(SimpleTestCase):

    def setUp(self):
        e_nd = expected_nd(100.0, 0.0, 1.0, 5000.0, DEPLOYMENT)
        self.floor = EdgeEstimate(
            0, EstimateSource.PARALLEL, 100.0, (0.0, math.pi), 106 / e_nd, 0,
            support=tuple((i, 0) for i in range(106)), e_nd=e_nd,
        )
        wall_e = expected_nd(60.0, math.pi / 2, 1.0, 5000.0, DEPLOYMENT)
        self.wall = EdgeEstimate(
            1, EstimateSource.GENERAL, 60.0, (math.pi / 2, 3 * math.pi / 2), 40 / wall_e, round(40 / wall_e),
            support=tuple((i, 1) for i in range(40)), e_nd=wall_e,
        )
        self.record = ConnectivityRecord(1, 0, '', '', 40, 35, Vertex.CONCAVE, True)

    def test_occluded_edge_count_restored(self):
        self.assertAlmostEqual(
            expected_nd_concave(100.0, 0.0, math.pi / 2, 1.0, 5000.0, DEPLOYMENT),
            self.floor.e_nd / 2,
        )
        out = concave_compensation([self.floor, self.wall], [self.record], 1.0, 5000.0, DEPLOYMENT)
        floor = out[0]
        self.assertEqual(floor.n_e_rounded, 1)
        self.assertTrue(floor.compensated)
        self.assertAlmostEqual(floor.n_e_convex, self.floor.n_e_hat)

    def test_counts_never_decrease(self):
        before = [self.floor, self.wall]
        out = concave_compensation(before, [self.record], 1.0, 5000.0, DEPLOYMENT)
        for old, new in zip(before, out):
            self.assertGreaterEqual(new.n_e_rounded, old.n_e_rounded)
            self.assertGreaterEqual(new.n_e_hat, old.n_e_hat)

    def test_convex_records_ignored(self):
        record = ConnectivityRecord(1, 0, '', '', 40, 5, Vertex.CONVEX, True)
        out = concave_compensation([self.floor, self.wall], [record], 1.0, 5000.0, DEPLOYMENT)
        self.assertEqual(out, [self.floor, self.wall])

    def test_strongest_concave_record_decides(self):
        # A floor seen half as often as a lone horizontal edge is two edges hidden by walls
        e_nd = self.floor.e_nd
        floor = EdgeEstimate(
            0, EstimateSource.PARALLEL, 100.0, (0.0, math.pi), 212 / e_nd, 1,
            support=tuple((i, 0) for i in range(212)), e_nd=e_nd,
        )
        slant = EdgeEstimate(
            2, EstimateSource.GENERAL, 30.0, (0.3, math.pi - 0.3), 1.0, 1,
            support=tuple((i, 2) for i in range(30)),
        )
        weak = ConnectivityRecord(2, 0, '', '', 40, 5, Vertex.CONCAVE, True)
        # Alone, the slanted neighbour's largest expectation hides the occlusion
        self.assertGreater(max(concave_expectations(floor, slant, 1.0, 5000.0, DEPLOYMENT)), 0.9 * e_nd)

        out = concave_compensation([floor, self.wall, slant], [weak, self.record], 1.0, 5000.0, DEPLOYMENT)
        self.assertEqual(out[0].n_e_rounded, 2)
        self.assertTrue(out[0].compensated)
        self.assertAlmostEqual(out[0].e_nd, e_nd / 2)

    def test_expectation_averages_both_roles(self):
        values = concave_expectations(self.floor, self.wall, 1.0, 5000.0, DEPLOYMENT)
        self.assertEqual(len(values), 4)
        for value in values:
            self.assertAlmostEqual(value, self.floor.e_nd / 2)

    def test_l_shaped_fixture_has_concave_corner(self):
        poly = get_preset('concave_corner')
        prev = poly.edges[CONCAVE_CORNER_EDGE - 1].direction
        cur = poly.edges[CONCAVE_CORNER_EDGE].direction
        self.assertTrue(is_concave_pair(prev, cur))


@tag('slow')
class ConcaveDetectionCountTestCase(SimpleTestCase):
    """Whole-edge detections of the occluded edge of the L-shaped fixture"""

    def test_counts_within_three_sigma(self):
        poly = get_preset('concave_corner')
        edge = poly.edges[CONCAVE_CORNER_EDGE]
        prev = poly.edges[CONCAVE_CORNER_EDGE - 1]
        cfg = SimConfig()
        # Every sensor of the field is swept once
        expected = expected_nd_concave(
            edge.length, edge.direction, prev.direction, cfg.v, cfg.omega_width / cfg.v, cfg.deployment,
        )
        self.assertGreater(expected, 50)
        for seed in PUBLISHED_SEEDS:
            result = simulate(poly, cfg.with_updates(seed=seed))
            segments, _ = extract_segments(result.traces, ExtractionParams(r_max=cfg.r_max))
            count = sum(
                1 for seg in segments
                if seg.valid_whole_edge and attribute_segment(
                    seg, result.sensors[seg.sensor_id], result.motion, poly, cfg.r_max,
                ) == CONCAVE_CORNER_EDGE
            )
            self.assertLess(abs(count - expected), 3 * math.sqrt(expected), f"seed {seed}: {count} vs {expected:.1f}")


@tag('slow')
class TankCompensationTestCase(SimpleTestCase):
    """The hull top beside the turret is two 45.8-long edges seen half as often"""

    HULL_TOP = 45.8

    def test_hull_top_count_rises(self):
        tank = get_preset('tank')
        cfg = SimConfig()
        raised = 0
        for seed in PUBLISHED_SEEDS[:3]:
            sim = simulate(tank, cfg.with_updates(seed=seed))
            result = run_estimation(sim.traces, cfg.deployment, sim.m_t, seed=seed)
            hull = min(result.estimates, key=lambda e: abs(e.lambda_hat - self.HULL_TOP))
            self.assertLess(abs(hull.lambda_hat - self.HULL_TOP), 8.0, f"seed {seed}")
            for est in result.estimates:
                if est.compensated:
                    self.assertGreaterEqual(est.n_e_hat, est.n_e_convex)
            if hull.n_e_rounded >= 2:
                raised += 1
        self.assertGreaterEqual(raised, 2)
