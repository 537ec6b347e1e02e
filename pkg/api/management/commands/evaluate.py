import time

from api.models import Experiment
from api.services.harness import emit_plot_data, persist_report, run_sweep, sweep_metrics
from api.services.trace_io import write_json

from ._base import ShapeSenseCommand


class Command(ShapeSenseCommand):
    help = 'Run an experiment (all runs of every sweep point) and write metrics and plot data'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--persist',
            action='store_true',
            help='Store the experiment and every run in the database',
        )

    def run(self, **options):
        start_time = time.time()
        spec = self.load_spec(options)
        out = self.out_dir(options)

        self.stdout.write(self.style.SUCCESS(f'🚀 Evaluating {spec.name}: {spec.runs} runs, base seed {spec.seed}'))
        results = run_sweep(spec)
        self.write_outputs(spec, results, out)

        if options.get('persist'):
            experiment = Experiment.objects.create(
                name=spec.name,
                preset=spec.preset or '',
                spec=spec.to_dict(),
                base_seed=spec.seed,
                runs=spec.runs,
                status=Experiment.STATUS_COMPLETED,
                mse=results[0].report.mse,
                metrics=sweep_metrics(results),
            )
            stored = persist_report(experiment, results)
            self.stdout.write(f'💾 Stored {stored} runs under experiment {experiment.id}')

        self.stdout.write(self.style.SUCCESS(f'🎉 Done in {time.time() - start_time:.1f}s'))

    def write_outputs(self, spec, results, out):
        for res in results:
            report = res.report
            label = res.point.values or 'defaults'
            rsr = ', '.join(f'{x:.3f}' for x in report.rsr_mse)
            self.stdout.write(f'📊 {label}: MSE={report.mse:.3f}, RSR-MSE=[{rsr}], v_hat={report.mean_v_hat}')
            if report.flagged_runs:
                self.stdout.write(self.style.WARNING(f'⚠️  {report.flagged_runs} runs missed at least one edge'))
        write_json(out / 'metrics.json', {'spec': spec.to_dict(), **sweep_metrics(results)})
        for path in emit_plot_data(results, out, spec.sim):
            self.stdout.write(f'📈 {path}')

