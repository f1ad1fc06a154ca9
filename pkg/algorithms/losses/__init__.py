"""Residuals, the adaptive weight and the empirical MA-APNN / PINN losses."""

from algorithms.losses.weights import (
    LOSS_MODES,
    LossHyper,
    ap_weight,
    validate_weight_bound,
    weight_pair,
)
from algorithms.losses.operators import (
    diffusion_residual,
    governing_residual,
    macro_aux_residual,
    operator_A,
    operator_B,
    transport_derivative,
)
from algorithms.losses.loss import (
    TELEMETRY_COLUMNS,
    LossBreakdown,
    boundary_terms,
    conservation_residual,
    empirical_loss,
    initial_terms,
    loss_gradient,
    sample_mean,
)

__all__ = [
    'LOSS_MODES', 'LossHyper', 'ap_weight', 'validate_weight_bound', 'weight_pair',
    'diffusion_residual', 'governing_residual', 'macro_aux_residual', 'operator_A', 'operator_B',
    'transport_derivative',
    'TELEMETRY_COLUMNS', 'LossBreakdown', 'boundary_terms', 'conservation_residual', 'empirical_loss',
    'initial_terms', 'loss_gradient', 'sample_mean',
]
