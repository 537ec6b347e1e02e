"""
Tests for the geometric primitives.

Covers angle handling, polygon construction and validation, and the ray
kernel the simulator uses to turn sensor poses into range samples.
"""
import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings as hyp_settings, strategies as st

from api.services.errors import InvalidPolygonError
from api.services.geometry import (
    AngleInterval, DirectedEdge, PolygonTarget, angle_distance, edge_detectable,
    normalize_angle, points_inside, ray_distances, ray_polygon_distance,
)
from api.services.presets import get_preset


class AngleTestCase(SimpleTestCase):
    """Normalization and wrapped intervals"""

    def test_normalize_angle_range(self):
        self.assertAlmostEqual(normalize_angle(-math.pi / 2), 3 * math.pi / 2)
        self.assertAlmostEqual(normalize_angle(5 * math.pi), math.pi)
        self.assertEqual(normalize_angle(2 * math.pi), 0.0)
        self.assertEqual(normalize_angle(0.0), 0.0)

    def test_angle_distance_wraps(self):
        self.assertAlmostEqual(angle_distance(0.1, 2 * math.pi - 0.1), 0.2)
        self.assertAlmostEqual(angle_distance(0.0, math.pi), math.pi)

    def test_interval_from_bounds_wraps_through_zero(self):
        iv = AngleInterval.from_bounds(3 * math.pi / 2, math.pi / 2)
        self.assertAlmostEqual(iv.length, math.pi)
        self.assertTrue(iv.contains(0.0))
        self.assertTrue(iv.contains(7 * math.pi / 4))
        self.assertFalse(iv.contains(math.pi))

    def test_equal_bounds_mean_full_circle(self):
        iv = AngleInterval.from_bounds(1.0, 1.0)
        self.assertTrue(iv.is_full)
        self.assertTrue(iv.contains(4.0))

    def test_interval_rejects_empty_length(self):
        with self.assertRaises(ValueError):
            AngleInterval(0.0, 0.0)

    def test_edge_detectable_open_half_plane(self):
        self.assertTrue(edge_detectable(0.0, math.pi / 2))
        self.assertFalse(edge_detectable(0.0, 3 * math.pi / 2))
        self.assertFalse(edge_detectable(0.0, math.pi))
        self.assertTrue(edge_detectable(3 * math.pi / 2, 0.0))


class PolygonTestCase(SimpleTestCase):
    """Construction and validation of targets"""

    def setUp(self):
        self.triangle = get_preset('triangle')

    def test_triangle_vertices_and_area(self):
        vertices = self.triangle.vertices()
        np.testing.assert_allclose(vertices, [[0, 0], [50 * math.sqrt(3), 0], [0, 50]], atol=1e-9)
        self.assertAlmostEqual(self.triangle.signed_area, 1250 * math.sqrt(3), places=6)
        self.assertAlmostEqual(self.triangle.perimeter, 150 + 50 * math.sqrt(3), places=9)

    def test_triangle_closes(self):
        dx, dy = self.triangle.closure_gap
        self.assertLess(abs(dx), 1e-9)
        self.assertLess(abs(dy), 1e-9)

    def test_from_vertices_matches_edges(self):
        poly = PolygonTarget.from_vertices([(0, 0), (10, 0), (10, 5), (0, 5)])
        self.assertEqual(len(poly.edges), 4)
        self.assertAlmostEqual(poly.edges[1].direction, math.pi / 2)
        self.assertAlmostEqual(poly.edges[2].direction, math.pi)
        self.assertAlmostEqual(poly.signed_area, 50.0)
        poly.validate()

    def test_clockwise_outline_rejected(self):
        poly = PolygonTarget.from_vertices([(0, 0), (0, 5), (10, 5), (10, 0)])
        with self.assertRaises(InvalidPolygonError):
            poly.validate()

    def test_self_intersecting_outline_rejected(self):
        bowtie = PolygonTarget.from_vertices([(0, 0), (10, 10), (10, 0), (0, 10)])
        with self.assertRaises(InvalidPolygonError):
            bowtie.validate()

    def test_open_boundary_rejected_when_closed(self):
        poly = PolygonTarget((DirectedEdge(10, 0), DirectedEdge(10, math.pi / 2), DirectedEdge(5, math.pi)))
        with self.assertRaises(InvalidPolygonError):
            poly.validate()

    def test_two_edge_closed_target_rejected(self):
        poly = PolygonTarget((DirectedEdge(10, 0), DirectedEdge(10, math.pi)))
        with self.assertRaises(InvalidPolygonError):
            poly.validate()

    def test_edge_needs_positive_length(self):
        with self.assertRaises(InvalidPolygonError):
            DirectedEdge(0.0, 1.0)
        with self.assertRaises(InvalidPolygonError):
            DirectedEdge(float('nan'), 1.0)

    def test_dict_round_trip_keeps_open_flag(self):
        poly = get_preset('single_edge')
        again = PolygonTarget.from_dict(poly.to_dict())
        self.assertFalse(again.closed)
        self.assertEqual(again.edges, poly.edges)

    def test_malformed_dict_rejected(self):
        with self.assertRaises(InvalidPolygonError):
            PolygonTarget.from_dict({'edges': [{'length': 3}]})

    def test_placed_and_scaled(self):
        moved = self.triangle.placed((100.0, 20.0))
        xmin, ymin, _, _ = moved.bounds()
        self.assertAlmostEqual(xmin, 100.0)
        self.assertAlmostEqual(ymin, 20.0)
        half = self.triangle.scaled(0.5)
        self.assertAlmostEqual(half.perimeter, self.triangle.perimeter / 2)
        with self.assertRaises(InvalidPolygonError):
            self.triangle.scaled(0.0)


class RayTestCase(SimpleTestCase):
    """Distance from a sensor to the target along its facing direction"""

    def setUp(self):
        self.triangle = get_preset('triangle')

    def test_ray_hits_bottom_edge(self):
        self.assertAlmostEqual(ray_polygon_distance((40.0, -30.0), math.pi / 2, self.triangle, 100.0), 30.0)

    def test_ray_facing_away_detects_nothing(self):
        self.assertIsNone(ray_polygon_distance((40.0, -30.0), 3 * math.pi / 2, self.triangle, 100.0))

    def test_target_beyond_range_detects_nothing(self):
        self.assertIsNone(ray_polygon_distance((40.0, -130.0), math.pi / 2, self.triangle, 100.0))

    def test_sensor_inside_target_reads_zero(self):
        self.assertEqual(ray_polygon_distance((20.0, 10.0), 0.3, self.triangle, 100.0), 0.0)

    def test_back_of_open_edge_is_invisible(self):
        edge = get_preset('single_edge')
        self.assertAlmostEqual(ray_polygon_distance((50.0, -20.0), math.pi / 2, edge, 100.0), 20.0)
        self.assertIsNone(ray_polygon_distance((50.0, 20.0), 3 * math.pi / 2, edge, 100.0))

    def test_hypotenuse_distance(self):
        # Leftward ray at mid height meets the hypotenuse at x = 25√3
        d = ray_polygon_distance((100.0, 25.0), math.pi, self.triangle, 100.0)
        self.assertAlmostEqual(d, 100.0 - 25.0 * math.sqrt(3), places=9)

    def test_vectorized_origins(self):
        ox = np.array([10.0, 40.0, 200.0])
        oy = np.array([-5.0, -50.0, -5.0])
        out = ray_distances(self.triangle.segments(), ox, oy, math.pi / 2, 100.0)
        np.testing.assert_allclose(out[:2], [5.0, 50.0])
        self.assertTrue(np.isnan(out[2]))

    def test_non_positive_range_rejected(self):
        with self.assertRaises(ValueError):
            ray_polygon_distance((0.0, 0.0), 0.0, self.triangle, 0.0)

    @hyp_settings(max_examples=200, deadline=None)
    @given(
        st.floats(min_value=-20, max_value=110),
        st.floats(min_value=-20, max_value=70),
    )
    def test_points_inside_matches_half_planes(self, x, y):
        # Triangle interior: y >= 0, x >= 0, x/(50√3) + y/50 <= 1
        slack = x / (50 * math.sqrt(3)) + y / 50 - 1
        margin = min(x, y, -slack * 50)
        if abs(margin) < 1e-6:
            return
        inside = bool(points_inside(self.triangle, np.array([x]), y)[0])
        self.assertEqual(inside, margin > 0)
