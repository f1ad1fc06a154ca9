"""
Adam on the flat parameter vector

adam_step is a pure function of (state, gradient, config): it returns a new
TrainState and leaves its inputs untouched, so runs can be replayed and
checkpointed step by step.
"""

import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, Optional

import numpy as np
import torch

from algorithms.exceptions import ConfigurationError, NonFiniteLossError
from algorithms.network.checkpoint import Checkpoint
from algorithms.network.mlp import ParameterVector

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    max_steps: int = 20000
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    resample_every: Optional[int] = None
    log_every: int = 100
    checkpoint_every: Optional[int] = None
    deterministic: bool = False
    seed: int = 0
    lr_decay_rate: float = 1.0
    lr_decay_every: Optional[int] = None

    def __post_init__(self):
        if self.max_steps < 0:
            raise ConfigurationError(f"max_steps must be nonnegative, got {self.max_steps}")
        if not self.learning_rate > 0.0:
            raise ConfigurationError(f"learning_rate must be positive, got {self.learning_rate}")
        for name in ('beta1', 'beta2'):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ConfigurationError(f"Adam {name} must lie in (0, 1), got {getattr(self, name)}")
        if not self.adam_epsilon > 0.0:
            raise ConfigurationError(f"adam_epsilon must be positive, got {self.adam_epsilon}")
        if self.log_every < 1:
            raise ConfigurationError(f"log_every must be at least 1, got {self.log_every}")
        for name in ('resample_every', 'checkpoint_every', 'lr_decay_every'):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ConfigurationError(f"{name} must be at least 1 when set, got {value}")
        if not 0.0 < self.lr_decay_rate <= 1.0:
            raise ConfigurationError(f"lr_decay_rate must lie in (0, 1], got {self.lr_decay_rate}")
        if self.seed < 0:
            raise ConfigurationError(f"seed must be nonnegative, got {self.seed}")

    def learning_rate_at(self, step: int) -> float:
        """Step-decayed rate for the update that follows `step` completed updates."""
        if self.lr_decay_every is None:
            return self.learning_rate
        return self.learning_rate * self.lr_decay_rate ** (step // self.lr_decay_every)

    def with_changes(self, **changes) -> "TrainConfig":
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return {key: value for key, value in asdict(self).items() if value is not None}


@dataclass
class TrainState:
    params: ParameterVector
    first_moment: torch.Tensor
    second_moment: torch.Tensor
    step: int = 0
    best_loss: float = float('inf')
    best_params: Optional[ParameterVector] = None
    rng: np.random.Generator = field(default_factory=np.random.default_rng)
    sample_skip: int = 0

    def __post_init__(self):
        n = len(self.params)
        if self.first_moment.numel() != n or self.second_moment.numel() != n:
            raise ValueError(f"Moment vectors must match the {n} parameters")
        if self.step < 0:
            raise ValueError(f"Step counter must be nonnegative, got {self.step}")

    @classmethod
    def initial(cls, params: ParameterVector, seed: int = 0, sample_skip: int = 0) -> "TrainState":
        zeros = torch.zeros_like(params.flat)
        return cls(params.detach(), zeros, zeros.clone(), rng=np.random.default_rng(seed), sample_skip=sample_skip)

    @classmethod
    def from_checkpoint(cls, checkpoint: Checkpoint) -> "TrainState":
        zeros = torch.zeros_like(checkpoint.params.flat)
        rng = np.random.default_rng()
        if checkpoint.rng_state is not None:
            rng.bit_generator.state = checkpoint.rng_state
        return cls(
            checkpoint.params,
            zeros if checkpoint.first_moment is None else checkpoint.first_moment,
            zeros.clone() if checkpoint.second_moment is None else checkpoint.second_moment,
            step=checkpoint.step,
            best_loss=float('inf') if checkpoint.best_loss is None else checkpoint.best_loss,
            best_params=checkpoint.best_params,
            rng=rng,
            sample_skip=int(checkpoint.extra.get('sample_skip', 0)),
        )

    def to_checkpoint(self, extra: Optional[Dict[str, Any]] = None) -> Checkpoint:
        extra = dict(extra or {})
        extra['sample_skip'] = self.sample_skip
        return Checkpoint(
            spec=self.params.spec,
            params=self.params,
            step=self.step,
            rng_state=self.rng.bit_generator.state,
            first_moment=self.first_moment,
            second_moment=self.second_moment,
            best_loss=None if self.best_loss == float('inf') else self.best_loss,
            best_params=self.best_params,
            extra=extra,
        )


def adam_step(state: TrainState, gradient: torch.Tensor, config: TrainConfig) -> TrainState:
    """
    One bias-corrected Adam update.

    Raises:
        ValueError: gradient length differs from the parameter count
        NonFiniteLossError: the gradient has NaN or inf entries
    """
    gradient = gradient.detach().reshape(-1)
    if gradient.numel() != len(state.params):
        raise ValueError(f"Gradient has {gradient.numel()} entries for {len(state.params)} parameters")
    if not bool(torch.isfinite(gradient).all()):
        raise NonFiniteLossError(f"Non-finite gradient at step {state.step}", step=state.step)

    t = state.step + 1
    first = config.beta1 * state.first_moment + (1.0 - config.beta1) * gradient
    second = config.beta2 * state.second_moment + (1.0 - config.beta2) * gradient * gradient
    first_hat = first / (1.0 - config.beta1 ** t)
    second_hat = second / (1.0 - config.beta2 ** t)
    update = config.learning_rate_at(state.step) * first_hat / (torch.sqrt(second_hat) + config.adam_epsilon)
    params = state.params.with_flat(state.params.flat.detach() - update)
    return replace(state, params=params, first_moment=first, second_moment=second, step=t)
