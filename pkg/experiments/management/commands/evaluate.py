from django.core.management.base import BaseCommand

from experiments.engine import experiment_config, output_dir, run_evaluate

from ._common import run_or_exit


class Command(BaseCommand):
    help = 'Sample rho of a trained checkpoint and, with --reference, write the error table'

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help='TOML experiment config the checkpoint was trained with')
        parser.add_argument('--checkpoint', required=True, help='checkpoint.pt written by train or reproduce')
        parser.add_argument('--reference', help='Reference CSV written by the reference command')
        parser.add_argument('--out', help='Output directory')
        parser.add_argument('--plot', action='store_true', help='Also write plot.svg (needs --reference)')
        parser.add_argument('--mc-draws', type=int, dest='mc_draws', help='z-draws for expectations')

    def handle(self, *args, **options):
        def action():
            config = experiment_config(config_path=options['config'])
            out = output_dir(options.get('out'), f"{config.problem.id}_{config.mode}")
            return run_evaluate(config, options['checkpoint'], out, options.get('reference'),
                                plot=options.get('plot', False), mc_draws=options.get('mc_draws'))

        result = run_or_exit(action)
        for snapshot, error in result.errors.items():
            self.stdout.write(f"  t = {snapshot}: L2 relative error {error:.3e}")
        self.stdout.write(self.style.SUCCESS(f"Prediction for '{result.problem_id}' written to {result.prediction_path}"))
