from api.services.estimator import EstimatorParams
from api.services.extraction import ExtractionParams
from api.services.pipeline import run_estimation
from api.services.trace_io import write_json

from ._base import ShapeSenseCommand


class Command(ShapeSenseCommand):
    help = 'Estimate speed, edges and shape from recorded range traces'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--traces', type=str, help='Trace file (default: <out>/traces.jsonl)')

    def run(self, **options):
        cfg, m_t, traces = self.load_traces(options)
        out = self.out_dir(options)
        if options.get('config'):
            spec = self.load_spec(options)
            extraction, params, seed = spec.extraction, spec.estimator, spec.seed
        else:
            extraction, params = ExtractionParams(), EstimatorParams.from_settings()
            seed = cfg.seed if options.get('seed') is None else options['seed']

        result = run_estimation(
            traces, cfg.deployment, m_t, extraction, params, seed=seed, sigma_s=cfg.sigma_s,
        )
        path = write_json(out / 'estimate.json', result.to_dict())

        self.stdout.write(f'🚗 v_hat={result.v_hat:.4f} from n_r={result.n_r}')
        for est in result.estimates:
            xis = ', '.join(f'{xi:.3f}' for xi in est.xi_candidates)
            self.stdout.write(f'  edge {est.index}: lambda={est.lambda_hat:.2f}, xi in {{{xis}}}, n_e={est.n_e_rounded}')
        if result.shape is not None and not result.shape.complete:
            self.stdout.write(self.style.WARNING(f'⚠️  Shape did not close: gap={result.shape.closure_gap}'))
        self.stdout.write(self.style.SUCCESS(f'✅ {len(result.estimates)} edge estimates written to {path}'))
