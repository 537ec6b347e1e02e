"""Shared flags and error handling for the shape estimation commands."""
import logging
from dataclasses import replace
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from api.services.errors import ConfigurationError, ShapeSenseError
from api.services.harness import STANDARD_EXPERIMENTS, load_experiment_spec, standard_experiment
from api.services.seeds import run_seed
from api.services.simulation import SimConfig
from api.services.trace_io import read_traces

logger = logging.getLogger(__name__)

DEFAULT_PRESET = 'triangle'


class ShapeSenseCommand(BaseCommand):
    """Base class: --config/--seed/--out/--preset/--runs and exit codes.

    Subclasses implement ``run(**options)``; any ShapeSenseError escaping it
    becomes a CommandError carrying the error's exit code.
    """

    def add_arguments(self, parser):
        parser.add_argument('--config', type=str, help='Experiment JSON file')
        parser.add_argument(
            '--experiment',
            type=str,
            help=f'Standard sweep instead of --config ({", ".join(STANDARD_EXPERIMENTS)})',
        )
        parser.add_argument('--seed', type=int, help='Base seed (overrides the config file)')
        parser.add_argument('--out', type=str, help='Output directory (default: SHAPESENSE_OUTPUT_DIR)')
        parser.add_argument('--preset', type=str, help='Named target outline (overrides the config target)')
        parser.add_argument('--runs', type=int, help='Number of runs (overrides the config file)')

    def handle(self, *args, **options):
        try:
            self.run(**options)
        except ShapeSenseError as exc:
            self.stderr.write(self.style.ERROR(f'❌ {exc}'))
            raise CommandError(str(exc), returncode=exc.exit_code) from exc

    def run(self, **options):
        raise NotImplementedError

    def load_spec(self, options):
        overrides = {'seed': options.get('seed'), 'runs': options.get('runs'), 'preset': options.get('preset')}
        source = options.get('config')
        if options.get('experiment'):
            if source:
                raise ConfigurationError("Use either --config or --experiment, not both")
            source = standard_experiment(options['experiment'])
        elif not source and not options.get('preset'):
            overrides['preset'] = DEFAULT_PRESET
        return load_experiment_spec(source, overrides)

    def out_dir(self, options) -> Path:
        out = Path(options.get('out') or settings.SHAPESENSE_OUTPUT_DIR)
        out.mkdir(parents=True, exist_ok=True)
        return out

    def single_run_config(self, spec) -> SimConfig:
        """Simulation config of run 0, seeded the same way the harness seeds it"""
        return replace(spec.sim, seed=run_seed(spec.seed, 0))

    def load_traces(self, options, default_name='traces.jsonl'):
        """Traces plus the deployment and m_t recorded in their header"""
        path = Path(options.get('traces') or self.out_dir(options) / default_name)
        header, traces = read_traces(path)
        if 'sim' not in header:
            raise ConfigurationError(f"{path} has no header line with the simulation config")
        cfg = SimConfig(**header['sim'])
        self.stdout.write(f'📂 Read {len(traces)} traces from {path}')
        return cfg, header.get('m_t'), traces
