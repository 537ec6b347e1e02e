from api.services.simulation import check_boundary_ratios, simulate
from api.services.trace_io import write_polygon, write_sensors, write_traces

from ._base import ShapeSenseCommand


class Command(ShapeSenseCommand):
    help = 'Deploy sensors, move the target through the field and record range traces'

    def run(self, **options):
        spec = self.load_spec(options)
        cfg = self.single_run_config(spec)
        out = self.out_dir(options)

        self.stdout.write(self.style.SUCCESS(f'🚀 Simulating {spec.name} with n_s={cfg.n_s}, v={cfg.v}, seed={cfg.seed}'))
        check_boundary_ratios(spec.target, cfg)
        result = simulate(spec.target, cfg)

        write_polygon(out / 'polygon.json', spec.target)
        write_sensors(out / 'sensors.jsonl', result.sensors)
        count = write_traces(out / 'traces.jsonl', result, cfg, spec.target)

        if not result.detected:
            self.stdout.write(self.style.WARNING('⚠️  No sensor detected the target'))
        self.stdout.write(f'📊 m_t={result.m_t:g}, traces={len(result.traces)}')
        self.stdout.write(self.style.SUCCESS(f'✅ Wrote {count} lines to {out / "traces.jsonl"}'))
