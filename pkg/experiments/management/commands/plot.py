from django.core.management.base import BaseCommand

from experiments.utils import plot_comparison

from ._common import run_or_exit


class Command(BaseCommand):
    help = 'Plot a prediction CSV over a reference CSV as an SVG file'

    def add_arguments(self, parser):
        parser.add_argument('prediction', help='prediction.csv or result.csv')
        parser.add_argument('reference', help='reference.csv or result.csv')
        parser.add_argument('--out', required=True, help='SVG file to write')
        parser.add_argument('--label', default='MA-APNNs', help='Legend name of the prediction')

    def handle(self, *args, **options):
        path = run_or_exit(lambda: plot_comparison(
            options['prediction'], options['reference'], options['out'], options['label'],
        ))
        self.stdout.write(self.style.SUCCESS(f"Plot written to {path}"))
