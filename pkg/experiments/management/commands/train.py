from django.core.management.base import BaseCommand

from experiments.engine import experiment_config, output_dir, run_train

from ._common import add_run_arguments, run_or_exit, run_overrides


class Command(BaseCommand):
    help = 'Train the network of a TOML experiment config'

    def add_arguments(self, parser):
        add_run_arguments(parser, config_required=True)
        parser.add_argument('--resume', action='store_true', help='Continue from checkpoint.pt in the output directory')

    def handle(self, *args, **options):
        def action():
            config = experiment_config(config_path=options['config'], **run_overrides(options))
            out = output_dir(options.get('out'), f"{config.problem.id}_{config.mode}")
            return run_train(config, out, resume=options.get('resume', False))

        artifacts = run_or_exit(action)
        outcome = artifacts.outcome
        self.stdout.write(
            f"  loss {outcome.initial_loss:.3e} -> {outcome.final_loss:.3e}, best {outcome.state.best_loss:.3e}, "
            f"{outcome.seconds:.1f}s"
        )
        self.stdout.write(self.style.SUCCESS(
            f"Trained '{artifacts.problem_id}' ({artifacts.mode}); checkpoint {artifacts.checkpoint_path}"
        ))
