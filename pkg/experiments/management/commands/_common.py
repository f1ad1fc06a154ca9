"""Flags and error handling shared by the experiment commands."""

import logging

from django.core.management.base import CommandError

from algorithms.losses.weights import LOSS_MODES
from experiments.engine import exit_code_for

logger = logging.getLogger(__name__)


def add_run_arguments(parser, config_required: bool = False):
    parser.add_argument('--config', required=config_required, help='TOML experiment config file')
    parser.add_argument('--mode', choices=LOSS_MODES, help='Loss: ma_apnn (default), pinn or pinn_plus_diffusion')
    parser.add_argument('--seed', type=int, help='Seed for initialization and resampling')
    parser.add_argument('--max-steps', type=int, dest='max_steps', help='Adam steps (0 evaluates the initial network)')
    parser.add_argument('--deterministic', action='store_true', help='Deterministic torch kernels')
    parser.add_argument('--out', help='Output directory')


def run_overrides(options) -> dict:
    return {
        'mode': options.get('mode'),
        'seed': options.get('seed'),
        'max_steps': options.get('max_steps'),
        'deterministic': True if options.get('deterministic') else None,
    }


def run_or_exit(action):
    """Call action(); failures become a CommandError with the matching exit code."""
    try:
        return action()
    except CommandError:
        raise
    except Exception as exc:
        code = exit_code_for(exc)
        logger.error(f"{type(exc).__name__}: {exc}")
        raise CommandError(str(exc), returncode=code) from exc
