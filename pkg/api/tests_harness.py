"""
Tests for experiment specs, error metrics and plot data.
"""
import json
import math
import tempfile
from pathlib import Path

from django.conf import settings
from django.test import SimpleTestCase, tag

from api.services.errors import ConfigurationError
from api.services.estimator import EdgeEstimate, EstimateSource
from api.services.geometry import DirectedEdge
from api.services.harness import (
    STANDARD_EXPERIMENTS, ExperimentSpec, MetricsReport, SweepPoint, SweepResult, emit_plot_data, epsilon_sq,
    load_experiment_spec, match_estimates, run_experiment, run_sweep, spec_for_preset, standard_experiment,
    sweep_metrics, sweep_points,
)
from api.services.presets import get_preset
from api.services.simulation import SimConfig


class EpsilonTestCase(SimpleTestCase):

    def setUp(self):
        self.edge = DirectedEdge(10.0, 0.0)

    def test_exact_estimate(self):
        self.assertAlmostEqual(epsilon_sq(self.edge, 10.0, (0.0, math.pi)), 0.0)

    def test_mirror_candidate_order(self):
        self.assertAlmostEqual(epsilon_sq(self.edge, 10.0, (math.pi, 0.0)), 0.0)

    def test_zero_length_estimate(self):
        self.assertAlmostEqual(epsilon_sq(self.edge, 0.0, (1.0,)), 100.0)


class MatchTestCase(SimpleTestCase):

    def test_unmatched_edge_gets_its_squared_length(self):
        true_edges = [DirectedEdge(10.0, 0.0), DirectedEdge(5.0, math.pi / 2)]
        estimates = [EdgeEstimate(0, EstimateSource.GENERAL, 5.0, (math.pi / 2, 3 * math.pi / 2), 1.0, 1)]
        errors, unmatched = match_estimates(true_edges, estimates)
        self.assertEqual(unmatched, [True, False])
        self.assertAlmostEqual(errors[0], 100.0)
        self.assertAlmostEqual(errors[1], 0.0)

    def test_no_estimates(self):
        errors, unmatched = match_estimates([DirectedEdge(3.0, 0.0)], [])
        self.assertEqual(errors, [9.0])
        self.assertEqual(unmatched, [True])


def sample_report():
    rows = [
        {'squared_errors': [2.0, 0.0], 'v_hat': 0.9, 'edge_count_correct': True, 'flagged': False},
        {'squared_errors': [2.0, 4.0], 'v_hat': 1.1, 'edge_count_correct': False, 'flagged': True},
    ]
    return MetricsReport.from_run_records(rows, [2.0, 4.0])


class MetricsReportTestCase(SimpleTestCase):

    def test_aggregate_from_rows(self):
        report = sample_report()
        self.assertAlmostEqual(report.mse, 4.0)
        self.assertAlmostEqual(report.rsr_mse[0], math.sqrt(2) / 2)
        self.assertAlmostEqual(report.rsr_mse[1], math.sqrt(2) / 4)
        self.assertAlmostEqual(report.mean_v_hat, 1.0)
        self.assertEqual(report.edge_count_accuracy, 0.5)
        self.assertEqual(report.flagged_runs, 1)

    def test_empty_rows(self):
        report = MetricsReport.from_run_records([], [2.0])
        self.assertTrue(math.isnan(report.mse))
        self.assertIsNone(report.mean_v_hat)

    def test_sweep_summary(self):
        summary = sweep_metrics([SweepResult(SweepPoint(0, {'v': 2.0}), sample_report())])
        point = summary['points'][0]
        self.assertEqual(point['values'], {'v': 2.0})
        self.assertAlmostEqual(point['mse'], 4.0)


class PlotDataTestCase(SimpleTestCase):

    def test_files_and_headers(self):
        results = [SweepResult(SweepPoint(0, {'n_s': 500}), sample_report())]
        with tempfile.TemporaryDirectory() as tmp:
            paths = emit_plot_data(results, tmp)
            names = sorted(p.name for p in paths)
            self.assertEqual(names, ['mse_vs_noise.csv', 'mse_vs_speed.csv', 'rsr_mse_vs_ns.csv'])
            rsr = (Path(tmp) / 'rsr_mse_vs_ns.csv').read_text().splitlines()
            self.assertEqual(rsr[0], 'n_s,edge,lambda_true,rsr_mse')
            self.assertEqual(len(rsr), 3)
            self.assertTrue(rsr[1].startswith('500,0,2.0,'))
            noise = (Path(tmp) / 'mse_vs_noise.csv').read_text().splitlines()
            self.assertEqual(noise, ['p_b,sigma_s,mse', '0.0,0.0,4.0'])

    def test_output_is_deterministic(self):
        results = [SweepResult(SweepPoint(0, {'v': 2.0}), sample_report())]
        with tempfile.TemporaryDirectory() as a, tempfile.TemporaryDirectory() as b:
            emit_plot_data(results, a, SimConfig())
            emit_plot_data(results, b, SimConfig())
            for name in ('rsr_mse_vs_ns.csv', 'mse_vs_noise.csv', 'mse_vs_speed.csv'):
                self.assertEqual((Path(a) / name).read_bytes(), (Path(b) / name).read_bytes())


class ExperimentSpecTestCase(SimpleTestCase):

    def test_missing_file(self):
        with self.assertRaises(ConfigurationError):
            load_experiment_spec('/nonexistent/experiment.json')

    def test_invalid_json(self):
        with tempfile.NamedTemporaryFile('w', suffix='.json', delete=False) as fh:
            fh.write('{"preset": ')
        try:
            with self.assertRaises(ConfigurationError):
                load_experiment_spec(fh.name)
        finally:
            Path(fh.name).unlink()

    def test_unknown_preset(self):
        with self.assertRaises(ConfigurationError):
            load_experiment_spec({'preset': 'hexagon'})

    def test_target_required(self):
        with self.assertRaises(ConfigurationError):
            load_experiment_spec({'runs': 2})

    def test_preset_spec(self):
        spec = load_experiment_spec({'preset': 'triangle', 'runs': 2})
        self.assertEqual(spec.runs, 2)
        self.assertEqual(spec.name, 'triangle')
        self.assertEqual(len(spec.target.edges), 3)
        self.assertEqual(spec.seed, settings.SHAPESENSE_DEFAULT_SEED)

    def test_file_with_overrides(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'exp.json'
            path.write_text(json.dumps({'preset': 'truck', 'runs': 5, 'sim': {'n_s': 1000}}))
            spec = load_experiment_spec(path, {'runs': 3, 'seed': None})
        self.assertEqual(spec.runs, 3)
        self.assertEqual(spec.sim.n_s, 1000)

    def test_custom_target(self):
        target = get_preset('single_edge').to_dict()
        spec = load_experiment_spec({'target': target, 'runs': 1})
        self.assertIsNone(spec.preset)
        self.assertEqual(spec.name, 'custom')

    def test_bad_sweep_axis(self):
        with self.assertRaises(ConfigurationError):
            load_experiment_spec({'preset': 'triangle', 'sweep': {'colour': [1.0]}})

    def test_runs_must_be_positive(self):
        with self.assertRaises(ConfigurationError):
            ExperimentSpec(target=get_preset('triangle'), runs=0)


class SweepPointTestCase(SimpleTestCase):

    def test_no_sweep_single_point(self):
        points = sweep_points(spec_for_preset('triangle'))
        self.assertEqual(len(points), 1)
        self.assertEqual(points[0].values, {})

    def test_grid_in_axis_order(self):
        spec = ExperimentSpec(
            target=get_preset('triangle'), sweep={'v': (1.0, 2.0), 'n_s': (100, 200)},
        )
        points = sweep_points(spec)
        self.assertEqual([p.index for p in points], [0, 1, 2, 3])
        self.assertEqual(points[0].values, {'n_s': 100, 'v': 1.0})
        self.assertEqual(points[3].values, {'n_s': 200, 'v': 2.0})
        self.assertEqual(points[3].apply(SimConfig()).v, 2.0)


class StandardExperimentTestCase(SimpleTestCase):

    def test_every_experiment_loads_as_a_sweep(self):
        for name in STANDARD_EXPERIMENTS:
            spec = load_experiment_spec(standard_experiment(name))
            self.assertEqual(len(sweep_points(spec)), 3, name)

    def test_loss_sweep_ends_detections_at_lost_samples(self):
        spec = load_experiment_spec(standard_experiment('loss'))
        self.assertEqual(spec.extraction.lost_policy, 'split')
        self.assertEqual(spec.sweep['p_b'], (0.0, 0.005, 0.01))
        self.assertEqual(load_experiment_spec(standard_experiment('noise')).extraction.lost_policy, 'invalidate')

    def test_speed_sweep_uses_sparse_field(self):
        spec = load_experiment_spec(standard_experiment('speed'), {'runs': 2})
        self.assertEqual(spec.sim.n_s, 500)
        self.assertEqual(spec.runs, 2)

    def test_returned_mapping_is_a_copy(self):
        standard_experiment('loss')['sweep']['p_b'].append(0.5)
        self.assertEqual(STANDARD_EXPERIMENTS['loss']['sweep']['p_b'], [0.0, 0.005, 0.01])

    def test_unknown_experiment(self):
        with self.assertRaises(ConfigurationError):
            standard_experiment('weather')


@tag('slow')
class ExperimentRunTestCase(SimpleTestCase):

    def test_triangle_runs_scored(self):
        spec = ExperimentSpec(target=get_preset('triangle'), preset='triangle', runs=3, seed=20240917)
        report = run_experiment(spec)
        self.assertEqual(len(report.runs), 3)
        for run in report.runs:
            self.assertEqual(len(run.squared_errors), 3)
            self.assertFalse(run.error)
            self.assertAlmostEqual(run.v_hat, 1.0, delta=0.15)
            # The horizontal edge is estimated within a fifth of its length
            self.assertLess(math.sqrt(run.squared_errors[0]), 0.2 * 50 * math.sqrt(3))
        self.assertEqual(len(report.rsr_mse), 3)
        again = run_experiment(spec)
        self.assertEqual(report.mse, again.mse)


def sweep_reports(name, runs=10):
    """Reports of a standard sweep keyed by the swept value"""
    spec = load_experiment_spec(standard_experiment(name), {'runs': runs})
    return {next(iter(res.point.values.values())): res.report for res in run_sweep(spec)}


@tag('slow')
class TrendTestCase(SimpleTestCase):
    """Error trends of the standard sweeps, all points sharing run seeds"""

    def test_loss_raises_error(self):
        reports = sweep_reports('loss')
        self.assertGreater(reports[0.01].mse, 3 * reports[0.0].mse)

    def test_noise_raises_error(self):
        reports = sweep_reports('noise')
        self.assertGreater(reports[0.1].mse, reports[0.0].mse)

    def test_speed_error_non_decreasing(self):
        reports = sweep_reports('speed')
        mse = [reports[v].mse for v in (1.0, 2.0, 5.0)]
        self.assertLessEqual(mse[0], mse[1])
        self.assertLessEqual(mse[1], mse[2])


@tag('slow')
class SensorCountTestCase(SimpleTestCase):
    """Relative errors of the triangle's edges as the field gets denser"""

    def test_relative_error_thresholds(self):
        full = sweep_reports('sensor_count')
        for n_s in (1000, 2000):
            horizontal, _, vertical = full[n_s].rsr_mse
            self.assertLessEqual(horizontal, 0.10, f"n_s={n_s}")
            self.assertLessEqual(vertical, 0.50, f"n_s={n_s}")

        half = sweep_reports('half_scale')
        for n_s in (500, 1000, 2000):
            ratio = sum(half[n_s].rsr_mse) / sum(full[n_s].rsr_mse)
            self.assertTrue(0.5 <= ratio <= 2.0, f"n_s={n_s}: half/full = {ratio:.2f}")
