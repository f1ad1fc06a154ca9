"""
Training loop

Each step evaluates the loss and its gradient at the current parameters,
records telemetry every `log_every` steps, and applies one Adam update.
The loss after the last update is evaluated once more, so the best
parameters cover every iterate. Interior points may be redrawn from fresh
Sobol skips chosen by the run RNG; the skip in use is part of the state and
of every checkpoint, so a resumed run sees the same points.
"""

import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

import pandas as pd
import torch

from algorithms.losses.loss import TELEMETRY_COLUMNS, LossBreakdown, loss_gradient
from algorithms.losses.weights import LossHyper
from algorithms.network.checkpoint import save_checkpoint
from algorithms.network.mlp import NetworkSpec, ParameterVector, value_and_grad
from algorithms.quadrature.angular import AngularQuadrature, quadrature_for
from algorithms.quadrature.sampling import SampleSets, resample_interior
from algorithms.training.adam import TrainConfig, TrainState, adam_step

logger = logging.getLogger(__name__)

MAX_RESAMPLE_SKIP = 2 ** 24

Objective = Callable[[ParameterVector, int], Tuple[object, torch.Tensor]]


@dataclass
class TrainingOutcome:
    state: TrainState
    telemetry: pd.DataFrame
    initial_loss: float
    final_loss: float
    seconds: float

    @property
    def best_params(self) -> ParameterVector:
        return self.state.best_params if self.state.best_params is not None else self.state.params

    @property
    def loss_ratio(self) -> float:
        return self.final_loss / self.initial_loss if self.initial_loss > 0.0 else 0.0


def _total(output) -> float:
    return float(getattr(output, 'total', output).detach())


def _row(output, step: int, seconds: float) -> Dict[str, float]:
    if isinstance(output, LossBreakdown):
        return output.telemetry_row(step, seconds)
    return {'step': step, 'total': _total(output), 'seconds': seconds}


def _track_best(state: TrainState, loss: float) -> TrainState:
    if loss < state.best_loss:
        state.best_loss = loss
        state.best_params = state.params.detach()
    return state


def run_adam(objective: Objective, state: TrainState, config: TrainConfig,
             before_step: Optional[Callable[[TrainState], None]] = None,
             after_step: Optional[Callable[[TrainState], None]] = None) -> TrainingOutcome:
    """
    Drive Adam from `state` until config.max_steps updates have been made.

    objective(params, step) returns (loss output, gradient); the output is a
    scalar tensor or a LossBreakdown.
    """
    rows: List[Dict[str, float]] = []
    started = time.perf_counter()
    initial_loss = None
    while state.step < config.max_steps:
        if before_step is not None:
            before_step(state)
        output, gradient = objective(state.params, state.step)
        loss = _total(output)
        if initial_loss is None:
            initial_loss = loss
        state = _track_best(state, loss)
        if state.step % config.log_every == 0:
            seconds = time.perf_counter() - started
            rows.append(_row(output, state.step, seconds))
            logger.info(f"step {state.step}: loss {loss:.6e}")
        state = adam_step(state, gradient, config)
        if after_step is not None:
            after_step(state)

    output, _ = objective(state.params, state.step)
    final_loss = _total(output)
    if initial_loss is None:
        initial_loss = final_loss
    state = _track_best(state, final_loss)
    seconds = time.perf_counter() - started
    columns = list(TELEMETRY_COLUMNS) if isinstance(output, LossBreakdown) else ['step', 'total', 'seconds']
    telemetry = pd.DataFrame(rows, columns=columns)
    logger.info(f"Finished at step {state.step}: loss {final_loss:.6e}, best {state.best_loss:.6e} ({seconds:.1f}s)")
    return TrainingOutcome(state, telemetry, initial_loss, final_loss, seconds)


def minimize(objective: Callable[[ParameterVector], torch.Tensor], params: ParameterVector,
             config: TrainConfig) -> TrainingOutcome:
    """Adam on any scalar objective of the parameters."""
    def with_gradient(theta: ParameterVector, step: int):
        return value_and_grad(objective, theta, step=step)

    return run_adam(with_gradient, TrainState.initial(params, config.seed), config)


def train(problem, spec: NetworkSpec, params: ParameterVector, hyper: LossHyper, samples: SampleSets,
          config: TrainConfig, quad: Optional[AngularQuadrature] = None, mode: str = 'ma_apnn',
          state: Optional[TrainState] = None, checkpoint_path: Optional[Union[str, Path]] = None,
          extra: Optional[Dict] = None) -> TrainingOutcome:
    """
    Minimize the empirical loss of the constrained network for a problem.

    Args:
        params: initial parameters (ignored when `state` resumes a run)
        state: a TrainState to continue from, e.g. TrainState.from_checkpoint
        checkpoint_path: written every config.checkpoint_every steps and at the end
        extra: metadata stored in checkpoints

    Returns:
        TrainingOutcome; best_params holds the parameters with the lowest loss seen

    Raises:
        NonFiniteLossError: the loss or its gradient became NaN or inf
    """
    quad = quad or quadrature_for(problem.dimension)
    if state is None:
        state = TrainState.initial(params, config.seed, samples.skip)
    current = {'samples': samples}
    if state.sample_skip != samples.skip:
        current['samples'] = resample_interior(problem, samples, state.sample_skip)

    def objective(theta: ParameterVector, step: int):
        return loss_gradient(theta, spec, problem, hyper, current['samples'], quad, mode,
                             config.deterministic, step)

    def before_step(s: TrainState):
        if config.resample_every and s.step > 0 and s.step % config.resample_every == 0:
            s.sample_skip = int(s.rng.integers(1, MAX_RESAMPLE_SKIP))
            current['samples'] = resample_interior(problem, current['samples'], s.sample_skip)

    def after_step(s: TrainState):
        if checkpoint_path is not None and config.checkpoint_every and s.step % config.checkpoint_every == 0:
            save_checkpoint(checkpoint_path, s.to_checkpoint(extra))

    logger.info(
        f"Training '{problem.id}' ({mode}) with {len(state.params)} parameters for {config.max_steps} steps "
        f"from step {state.step}"
    )
    outcome = run_adam(objective, state, config, before_step, after_step)
    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, outcome.state.to_checkpoint(extra))
    return outcome
