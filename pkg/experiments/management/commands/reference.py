from django.conf import settings
from django.core.management.base import BaseCommand

from algorithms.solvers.diffusion import MC_REFERENCE_DRAWS
from experiments.engine import run_reference

from ._common import run_or_exit


class Command(BaseCommand):
    help = 'Solve the reference density of a builtin example with the solver for its regime'

    def add_arguments(self, parser):
        parser.add_argument('example_id', help='Builtin example id')
        parser.add_argument('--config', help='Use the problem of a TOML config file instead')
        parser.add_argument('--cells', type=int, help='Cells per axis')
        parser.add_argument('--steps', type=int, help='Time steps')
        parser.add_argument('--draws', type=int, default=MC_REFERENCE_DRAWS,
                            help='z-draws for random-input references')
        parser.add_argument('--seed', type=int, help='Seed for the z-draws')
        parser.add_argument('--out', help='Output directory')

    def handle(self, *args, **options):
        seed = options.get('seed')
        if seed is None:
            seed = settings.MAAPNN['DEFAULT_SEED']
        reference, path = run_or_exit(lambda: run_reference(
            options['example_id'],
            out=options.get('out'),
            cells=options.get('cells'),
            steps=options.get('steps'),
            draws=options['draws'],
            seed=seed,
            config_path=options.get('config'),
        ))
        times = ', '.join(f"{t:g}" for t in reference.times)
        self.stdout.write(self.style.SUCCESS(f"Wrote {reference.scheme} reference at t = {times} to {path}"))
