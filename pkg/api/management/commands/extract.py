from api.services.errors import NoDetectionError
from api.services.estimator import estimate_speed
from api.services.extraction import (
    ExtractionParams, count_nonzero_detectors, extract_segments, finalize_sd, pair_consecutive,
)
from api.services.pipeline import observation_span
from api.services.trace_io import write_pairs, write_segments

from ._base import ShapeSenseCommand


class Command(ShapeSenseCommand):
    help = 'Cut range traces into detection segments and consecutive pairs'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--traces', type=str, help='Trace file (default: <out>/traces.jsonl)')

    def run(self, **options):
        cfg, m_t, traces = self.load_traces(options)
        out = self.out_dir(options)
        params = self.extraction_params(options).with_r_max(cfg.r_max)

        segments, discarded = extract_segments(traces, params)
        if m_t is None:
            m_t = observation_span(traces)
        n_r = count_nonzero_detectors(traces)
        if m_t <= 0 or n_r == 0:
            raise NoDetectionError('No sensor detected the target at a positive range')

        deployment = cfg.deployment
        v_hat = estimate_speed(n_r, m_t, deployment)
        segments = [finalize_sd(s, v_hat, params.zero_step_tol) for s in segments]
        pairs = pair_consecutive(segments, v_hat, deployment.dt)

        write_segments(out / 'segments.jsonl', segments)
        write_pairs(out / 'pairs.jsonl', pairs)

        valid = sum(1 for s in segments if s.valid_whole_edge)
        self.stdout.write(f'📊 n_r={n_r}, v_hat={v_hat:.4f}, discarded={discarded}')
        self.stdout.write(self.style.SUCCESS(
            f'✅ {len(segments)} segments ({valid} whole-edge), {len(pairs)} consecutive pairs'
        ))

    def extraction_params(self, options) -> ExtractionParams:
        if options.get('config'):
            return self.load_spec(options).extraction
        return ExtractionParams()
