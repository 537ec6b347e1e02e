"""Tests for ordering edge estimates into an outline."""
import math

from django.test import SimpleTestCase, tag

from api.services.estimator import ConnectivityRecord, EdgeEstimate, EstimateSource
from api.services.extraction import Vertex
from api.services.geometry import angle_distance
from api.services.pipeline import run_estimation
from api.services.presets import get_preset
from api.services.seeds import PUBLISHED_SEEDS
from api.services.shape import assemble_shape
from api.services.simulation import SimConfig, simulate

SQRT3 = math.sqrt(3.0)


def estimate(index, lam, candidates, support=50):
    return EdgeEstimate(
        index, EstimateSource.GENERAL, lam, candidates, 1.0, 1,
        support=tuple((index, i) for i in range(support)),
    )


def link(head, tail, vertex=Vertex.CONVEX, n_c=40):
    return ConnectivityRecord(head, tail, '', '', n_c, n_c if vertex == Vertex.CONCAVE else 0, vertex, True)


class AssembleShapeTestCase(SimpleTestCase):

    def setUp(self):
        self.estimates = [
            estimate(0, 50 * SQRT3, (0.0, math.pi)),
            estimate(1, 100.0, (5 * math.pi / 6, math.pi / 6)),
            estimate(2, 50.0, (3 * math.pi / 2, math.pi / 2)),
        ]
        self.records = [link(1, 0), link(2, 1), link(0, 2)]

    def test_triangle_closes(self):
        shape = assemble_shape(self.estimates, self.records)
        self.assertTrue(shape.cyclic)
        self.assertTrue(shape.complete)
        self.assertLess(shape.gap_norm, 1e-6)
        self.assertAlmostEqual(shape.perimeter, 150 + 50 * SQRT3)
        # The outline is only known up to a half turn
        directions = {e.estimate: e.direction for e in shape.ordered_edges}
        truth = {0: 0.0, 1: 5 * math.pi / 6, 2: 3 * math.pi / 2}
        flip = 0.0 if angle_distance(directions[0], 0.0) < 1e-9 else math.pi
        for index, xi in truth.items():
            self.assertLess(angle_distance(directions[index], xi + flip), 1e-9)

    def test_counterclockwise_order(self):
        shape = assemble_shape(self.estimates, self.records)
        order = [e.estimate for e in shape.ordered_edges]
        start = order.index(0)
        self.assertEqual(order[start:] + order[:start], [0, 1, 2])

    def test_missing_links_give_open_path(self):
        shape = assemble_shape(self.estimates, [link(1, 0)])
        self.assertFalse(shape.cyclic)
        self.assertFalse(shape.complete)
        self.assertEqual(len(shape.ordered_edges), 3)

    def test_one_unlinked_vertex_still_closes(self):
        shape = assemble_shape(self.estimates, [link(1, 0), link(2, 1)])
        self.assertTrue(shape.cyclic)
        self.assertTrue(shape.complete)
        self.assertLess(shape.gap_norm, 1e-6)

    def test_unlinked_vertex_needs_small_gap(self):
        estimates = self.estimates[:2] + [estimate(2, 80.0, (3 * math.pi / 2, math.pi / 2))]
        shape = assemble_shape(estimates, [link(1, 0), link(2, 1)])
        self.assertFalse(shape.cyclic)
        self.assertFalse(shape.complete)

    def test_insignificant_links_ignored(self):
        weak = [ConnectivityRecord(r.head, r.tail, '', '', 3, 0, Vertex.CONVEX, False) for r in self.records]
        self.assertFalse(assemble_shape(self.estimates, weak).cyclic)

    def test_single_estimate(self):
        shape = assemble_shape(self.estimates[:1], [])
        self.assertFalse(shape.cyclic)
        self.assertEqual(len(shape.ordered_edges), 1)
        self.assertAlmostEqual(shape.gap_norm, 50 * SQRT3)

    def test_no_estimates(self):
        self.assertIsNone(assemble_shape([], []))

    def test_repeated_edges_expand(self):
        doubled = EdgeEstimate(
            0, EstimateSource.PARALLEL, 20.0, (0.0, math.pi), 2.0, 2, support=((0, 0),),
        )
        shape = assemble_shape([doubled], [])
        self.assertEqual(len(shape.ordered_edges), 2)

    def test_to_dict(self):
        data = assemble_shape(self.estimates, self.records).to_dict()
        self.assertEqual(len(data['ordered_edges']), 3)
        self.assertEqual(set(data['ordered_edges'][0]), {'estimate', 'lambda', 'xi'})
        self.assertTrue(data['complete'])


@tag('slow')
class SimulatedTriangleShapeTestCase(SimpleTestCase):

    def test_triangle_runs_close(self):
        cfg = SimConfig()
        complete = 0
        for seed in PUBLISHED_SEEDS[:3]:
            sim = simulate(get_preset('triangle'), cfg.with_updates(seed=seed))
            result = run_estimation(sim.traces, cfg.deployment, sim.m_t, seed=seed)
            if result.shape.complete:
                complete += 1
                self.assertLessEqual(result.shape.gap_norm, 0.05 * result.shape.perimeter)
        self.assertGreaterEqual(complete, 2)
