from django.core.management.base import BaseCommand

from experiments.engine import run_reproduce

from ._common import add_run_arguments, run_or_exit, run_overrides


class Command(BaseCommand):
    help = 'Train a builtin example, compare it with its reference and write the error table'

    def add_arguments(self, parser):
        parser.add_argument('example_id', help='Builtin example, e.g. ex_4_1_3 or uq_problem_1')
        add_run_arguments(parser)
        parser.add_argument('--paper-scale', action='store_true', dest='paper_scale',
                            help='Published network widths, sample counts and step budget')
        parser.add_argument('--plot', action='store_true', help='Also write plot.svg')
        parser.add_argument('--mc-draws', type=int, dest='mc_draws', help='z-draws for expectations')

    def handle(self, *args, **options):
        result = run_or_exit(lambda: run_reproduce(
            options['example_id'],
            out=options.get('out'),
            config_path=options.get('config'),
            paper_scale=options.get('paper_scale', False),
            plot=options.get('plot', False),
            mc_draws=options.get('mc_draws'),
            **run_overrides(options),
        ))

        for snapshot, error in result.errors.items():
            self.stdout.write(f"  t = {snapshot}: L2 relative error {error:.3e}")
        if result.loss_ratio is not None:
            self.stdout.write(
                f"  loss {result.initial_loss:.3e} -> {result.final_loss:.3e} (ratio {result.loss_ratio:.3e}), "
                f"{result.training_seconds:.1f}s"
            )
        self.stdout.write(
            self.style.SUCCESS(f"Reproduced '{result.problem_id}' ({result.mode}); results in {result.prediction_path.parent}")
        )
