"""
Loss hyperparameters and the adaptive weight lambda

    lambda(r) = exp(-nu(r) beta1) + beta2,   nu = sigma / eps^2 + alpha

blends the transport residual (weight lambda) with the macroscopic
auxiliary residual (weight 1 - lambda). As eps -> 0 the exponential
underflows and lambda equals beta2 exactly.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Dict, Tuple

import torch

from algorithms.exceptions import ConfigurationError
from algorithms.network.jets import DTYPE
from algorithms.problems.coefficients import evaluate_coefficients
from algorithms.quadrature.sampling import interior_points

logger = logging.getLogger(__name__)

LOSS_MODES = ('ma_apnn', 'pinn', 'pinn_plus_diffusion')
WEIGHT_EXPONENTS = ('loss_weighted', 'residual_weighted')
WEIGHT_PROBE_POINTS = 256


@dataclass(frozen=True)
class LossHyper:
    beta1: float = 1e-3
    beta2: float = 1e-4
    lambda_b: float = 1.0
    lambda_i: float = 1.0
    lambda_c: float = 0.0
    lambda_g: float = 1.0
    lambda_d: float = 1.0
    weight_exponent: str = 'loss_weighted'
    include_ab: bool = True

    def __post_init__(self):
        if not (self.beta1 > 0.0 and self.beta2 > 0.0):
            raise ConfigurationError(f"beta1 and beta2 must be positive, got ({self.beta1}, {self.beta2})")
        for name in ('lambda_b', 'lambda_i', 'lambda_c', 'lambda_g', 'lambda_d'):
            if getattr(self, name) < 0.0:
                raise ConfigurationError(f"{name} must be nonnegative, got {getattr(self, name)}")
        if self.weight_exponent not in WEIGHT_EXPONENTS:
            raise ConfigurationError(
                f"Unknown weight_exponent '{self.weight_exponent}'. Use one of: {', '.join(WEIGHT_EXPONENTS)}"
            )

    def scaled(self, factor: float) -> "LossHyper":
        """Every loss weight multiplied by factor (betas unchanged)."""
        return LossHyper(self.beta1, self.beta2, self.lambda_b * factor, self.lambda_i * factor,
                         self.lambda_c * factor, self.lambda_g * factor, self.lambda_d * factor,
                         self.weight_exponent, self.include_ab)

    def to_dict(self) -> Dict:
        return asdict(self)


def weight_from_nu(nu: torch.Tensor, hyper: LossHyper) -> torch.Tensor:
    return torch.exp(-nu * hyper.beta1) + hyper.beta2


def ap_weight(points, problem, hyper: LossHyper) -> torch.Tensor:
    """lambda at point rows (t, r, z): shape (N,)."""
    points = torch.as_tensor(points, dtype=DTYPE)
    if points.dim() == 1:
        points = points.unsqueeze(0)
    coefficients = evaluate_coefficients(problem, points, keys=[])
    return weight_from_nu(coefficients.nu(problem.epsilon), hyper).reshape(-1)


def weight_pair(lam: torch.Tensor, hyper: LossHyper) -> Tuple[torch.Tensor, torch.Tensor]:
    """(w_g, w_m) applied to the squared governing and auxiliary residuals."""
    if hyper.weight_exponent == 'loss_weighted':
        return lam, 1.0 - lam
    return lam * lam, (1.0 - lam) * (1.0 - lam)


def validate_weight_bound(problem, hyper: LossHyper, n_probe: int = WEIGHT_PROBE_POINTS) -> float:
    """
    Check 1 - max lambda > 0 on Sobol probe points of the domain.

    Returns the largest lambda found.

    Raises:
        ConfigurationError: the auxiliary weight 1 - lambda is not positive somewhere
    """
    lam = ap_weight(interior_points(problem, n_probe), problem, hyper)
    largest = float(lam.max())
    if not 1.0 - largest > 0.0:
        raise ConfigurationError(
            f"Problem '{problem.id}': beta = ({hyper.beta1}, {hyper.beta2}) gives max lambda = {largest} >= 1; "
            f"increase beta1 or decrease beta2"
        )
    logger.debug(f"Weight bound holds for '{problem.id}': max lambda = {largest}")
    return largest
