"""Feedforward network, truncated jets and checkpoints."""

from algorithms.network.jets import DTYPE, MAX_ORDER, JetTable, MultiIndex, multi_indices
from algorithms.network.mlp import (
    NetworkSpec,
    ParameterVector,
    forward,
    forward_jet,
    grad_params,
    init_network,
    propagate_jet,
    value_and_grad,
)
from algorithms.network.checkpoint import Checkpoint, load_checkpoint, save_checkpoint

__all__ = [
    'DTYPE', 'MAX_ORDER', 'JetTable', 'MultiIndex', 'multi_indices',
    'NetworkSpec', 'ParameterVector', 'forward', 'forward_jet', 'grad_params', 'init_network',
    'propagate_jet', 'value_and_grad',
    'Checkpoint', 'load_checkpoint', 'save_checkpoint',
]
