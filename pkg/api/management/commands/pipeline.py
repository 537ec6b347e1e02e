from django.core.management import call_command

from ._base import ShapeSenseCommand

STAGES = ('simulate', 'extract', 'estimate', 'evaluate')


class Command(ShapeSenseCommand):
    help = 'Simulate, extract, estimate and evaluate in one go'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--persist', action='store_true', help='Store the evaluation in the database')

    def run(self, **options):
        shared = {
            key: options[key]
            for key in ('config', 'seed', 'out', 'preset', 'runs')
            if options.get(key) is not None
        }
        for stage in STAGES:
            self.stdout.write('─' * 50)
            self.stdout.write(f'▶️  {stage}')
            kwargs = dict(shared)
            if stage == 'evaluate' and options.get('persist'):
                kwargs['persist'] = True
            call_command(stage, stdout=self.stdout, stderr=self.stderr, **kwargs)
        self.stdout.write(self.style.SUCCESS('🎉 Pipeline completed'))
