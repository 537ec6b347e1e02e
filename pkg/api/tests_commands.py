"""Tests for the management commands."""
import json
import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, tag

SMALL_FIELD = {'preset': 'triangle', 'runs': 1, 'sim': {'n_s': 300, 'omega_width': 1000.0}}


def run(*args, **options):
    out, err = StringIO(), StringIO()
    call_command(*args, stdout=out, stderr=err, **options)
    return out.getvalue()


class PresetsCommandTestCase(SimpleTestCase):

    def test_lists_presets(self):
        output = run('presets')
        self.assertIn('triangle: 3 edges', output)
        self.assertIn('concave_corner (fixture)', output)

    def test_show_preset(self):
        data = json.loads(run('presets', show='triangle'))
        self.assertEqual(data['name'], 'triangle')
        self.assertEqual(len(data['edges']), 3)
        self.assertFalse(data['fixture'])

    def test_unknown_preset_exit_code(self):
        with self.assertRaises(CommandError) as ctx:
            run('presets', show='hexagon')
        self.assertEqual(ctx.exception.returncode, 2)


class ConfigErrorTestCase(SimpleTestCase):

    def test_missing_config_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(CommandError) as ctx:
                run('simulate', config=str(Path(tmp) / 'missing.json'), out=tmp)
        self.assertEqual(ctx.exception.returncode, 2)

    def test_missing_trace_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(CommandError) as ctx:
                run('extract', out=tmp)
        self.assertEqual(ctx.exception.returncode, 2)

    def test_config_and_experiment_exclusive(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = Path(tmp) / 'experiment.json'
            config.write_text(json.dumps(SMALL_FIELD))
            with self.assertRaises(CommandError) as ctx:
                run('evaluate', config=str(config), experiment='loss', out=tmp)
        self.assertEqual(ctx.exception.returncode, 2)

    def test_unknown_experiment(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(CommandError) as ctx:
                run('evaluate', experiment='weather', out=tmp)
        self.assertEqual(ctx.exception.returncode, 2)


def write_traces(directory, rows):
    """Trace file with a small field header and the given sample rows"""
    header = {'type': 'header', 'sim': {'n_s': 10, 'omega_width': 1000.0}, 'm_t': None}
    lines = [header] + [{'sensor_id': i, 't0': 0.0, 'dt': 1.0, 'samples': samples} for i, samples in enumerate(rows)]
    path = Path(directory) / 'traces.jsonl'
    path.write_text(''.join(json.dumps(line) + '\n' for line in lines))
    return path


class EstimateExitCodeTestCase(SimpleTestCase):

    def test_no_detection(self):
        with tempfile.TemporaryDirectory() as tmp:
            write_traces(tmp, [[None, None, None], [None, 'lost', None]])
            with self.assertRaises(CommandError) as ctx:
                run('estimate', out=tmp)
        self.assertEqual(ctx.exception.returncode, 3)

    def test_no_usable_edge_estimate(self):
        # One sloped detection: no pair to solve and no horizontal edge
        with tempfile.TemporaryDirectory() as tmp:
            write_traces(tmp, [[None, 40.0, 41.0, 42.0, 43.0, 44.0, None], [None, None, None]])
            with self.assertRaises(CommandError) as ctx:
                run('estimate', out=tmp)
            self.assertFalse((Path(tmp) / 'estimate.json').exists())
        self.assertEqual(ctx.exception.returncode, 4)


@tag('slow')
class SimulateExtractTestCase(SimpleTestCase):

    def test_simulate_then_extract(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = Path(tmp) / 'experiment.json'
            config.write_text(json.dumps(SMALL_FIELD))
            output = run('simulate', config=str(config), out=tmp, seed=11)
            self.assertIn('Wrote', output)
            for name in ('polygon.json', 'sensors.jsonl', 'traces.jsonl'):
                self.assertTrue((Path(tmp) / name).exists(), name)
            with (Path(tmp) / 'sensors.jsonl').open() as fh:
                self.assertEqual(sum(1 for _ in fh), 300)

            output = run('extract', out=tmp)
            self.assertIn('segments', output)
            self.assertTrue((Path(tmp) / 'segments.jsonl').exists())
            self.assertTrue((Path(tmp) / 'pairs.jsonl').exists())
