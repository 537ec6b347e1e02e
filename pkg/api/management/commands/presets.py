import json

from api.services.presets import describe_preset, preset_names

from ._base import ShapeSenseCommand


class Command(ShapeSenseCommand):
    help = 'List the named target outlines, or print one as JSON'

    def add_arguments(self, parser):
        parser.add_argument('--show', type=str, help='Print the named preset as JSON')

    def run(self, **options):
        if options.get('show'):
            self.stdout.write(json.dumps(describe_preset(options['show']), indent=2))
            return

        for name in preset_names():
            info = describe_preset(name)
            marker = ' (fixture)' if info['fixture'] else ''
            self.stdout.write(
                f"{name}{marker}: {len(info['edges'])} edges, perimeter={info['perimeter']:.1f}, area={info['area']:.1f}"
            )
