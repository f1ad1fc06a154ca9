"""
Checkpoint files

A checkpoint is a `torch.save` archive of a plain dict:

    format         'maapnn-checkpoint'
    version        1
    spec           NetworkSpec.to_dict()
    params         flat float64 parameter tensor
    step           optimizer step counter
    rng_state      numpy bit-generator state dict of the run RNG
    first_moment   Adam first moments (optional)
    second_moment  Adam second moments (optional)
    best_loss      best total loss seen so far (optional)
    best_params    flat parameters at best_loss (optional)
    extra          free-form metadata dict (config echo, problem id)

Tensors are stored raw, so a save/load cycle is bitwise exact.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import torch

from algorithms.exceptions import ConfigurationError
from algorithms.network.mlp import NetworkSpec, ParameterVector

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = 'maapnn-checkpoint'
CHECKPOINT_VERSION = 1


@dataclass
class Checkpoint:
    spec: NetworkSpec
    params: ParameterVector
    step: int = 0
    rng_state: Optional[Dict[str, Any]] = None
    first_moment: Optional[torch.Tensor] = None
    second_moment: Optional[torch.Tensor] = None
    best_loss: Optional[float] = None
    best_params: Optional[ParameterVector] = None
    extra: Dict[str, Any] = field(default_factory=dict)


def save_checkpoint(path: Union[str, Path], checkpoint: Checkpoint) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        'format': CHECKPOINT_FORMAT,
        'version': CHECKPOINT_VERSION,
        'spec': checkpoint.spec.to_dict(),
        'params': checkpoint.params.flat.detach().clone(),
        'step': int(checkpoint.step),
        'rng_state': checkpoint.rng_state,
        'first_moment': None if checkpoint.first_moment is None else checkpoint.first_moment.detach().clone(),
        'second_moment': None if checkpoint.second_moment is None else checkpoint.second_moment.detach().clone(),
        'best_loss': checkpoint.best_loss,
        'best_params': None if checkpoint.best_params is None else checkpoint.best_params.flat.detach().clone(),
        'extra': dict(checkpoint.extra),
    }
    torch.save(payload, path)
    logger.debug(f"Checkpoint written to {path} at step {checkpoint.step}")
    return path


def load_checkpoint(path: Union[str, Path], expected_spec: Optional[NetworkSpec] = None) -> Checkpoint:
    """Read a checkpoint; with expected_spec, refuse files written for another network."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Checkpoint not found: {path}")
    payload = torch.load(path, map_location='cpu', weights_only=False)
    if not isinstance(payload, dict) or payload.get('format') != CHECKPOINT_FORMAT:
        raise ConfigurationError(f"{path} is not a checkpoint file")
    if payload.get('version') != CHECKPOINT_VERSION:
        raise ConfigurationError(f"Unsupported checkpoint version {payload.get('version')} in {path}")

    spec = NetworkSpec.from_dict(payload['spec'])
    if expected_spec is not None and spec != expected_spec:
        raise ConfigurationError(
            f"Checkpoint network {list(spec.layer_widths)} ({spec.output_activation}) does not match "
            f"configured network {list(expected_spec.layer_widths)} ({expected_spec.output_activation})"
        )
    best = payload.get('best_params')
    return Checkpoint(
        spec=spec,
        params=ParameterVector(spec, payload['params']),
        step=payload['step'],
        rng_state=payload.get('rng_state'),
        first_moment=payload.get('first_moment'),
        second_moment=payload.get('second_moment'),
        best_loss=payload.get('best_loss'),
        best_params=None if best is None else ParameterVector(spec, best),
        extra=payload.get('extra') or {},
    )
