"""Adam and the training loop."""

from algorithms.training.adam import TrainConfig, TrainState, adam_step
from algorithms.training.loop import TrainingOutcome, minimize, run_adam, train

__all__ = ['TrainConfig', 'TrainState', 'adam_step', 'TrainingOutcome', 'minimize', 'run_adam', 'train']
