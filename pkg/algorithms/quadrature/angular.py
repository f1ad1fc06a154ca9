"""
Angular quadrature for the bracket average <f>

1D transport uses Gauss-Legendre nodes mu_m in (-1, 1); 2D transport uses
equispaced directions on the unit circle. Normalized weights sum to one, so
<f> = sum_m w_m f(Omega_m).
"""

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np
import torch

logger = logging.getLogger(__name__)

MAX_GAUSS_LEGENDRE_NODES = 128
NEWTON_TOLERANCE = 1e-14
NEWTON_MAX_ITERATIONS = 100


@dataclass(frozen=True, eq=False)
class AngularQuadrature:
    """
    Directions and weights of an angular rule.

    nodes has shape (n, 1) in 1D (mu) and (n, 2) in 2D (xi, eta);
    raw_weights integrate over [-1, 1] or the circle, weights are normalized.
    """
    nodes: np.ndarray
    raw_weights: np.ndarray
    weights: np.ndarray
    dimension: int

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def second_moment(self) -> float:
        """<Omega_x^2> of the continuous sphere model: 1/3 in 1D, 1/2 in 2D."""
        return 1.0 / 3.0 if self.dimension == 1 else 0.5

    def nodes_tensor(self) -> torch.Tensor:
        return torch.from_numpy(np.ascontiguousarray(self.nodes, dtype=np.float64))

    def weights_tensor(self) -> torch.Tensor:
        return torch.from_numpy(np.ascontiguousarray(self.weights, dtype=np.float64))

    def inflow_mask(self, outward_normal: np.ndarray) -> np.ndarray:
        """Directions entering the domain through a face with the given outward normal."""
        return self.nodes @ np.asarray(outward_normal, dtype=np.float64) < 0.0


def _legendre_with_derivative(n: int, x: np.ndarray):
    p_prev = np.ones_like(x)
    p = x.copy()
    for k in range(2, n + 1):
        p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
    derivative = n * (x * p - p_prev) / (x * x - 1.0)
    return p, derivative


def gauss_legendre(n: int) -> AngularQuadrature:
    """
    Gauss-Legendre rule with n nodes on [-1, 1].

    Roots of P_n are found by Newton iteration from Chebyshev-like initial
    guesses; only the nonnegative half is iterated and mirrored, so nodes
    and weights are exactly symmetric.
    """
    if not 1 <= n <= MAX_GAUSS_LEGENDRE_NODES:
        raise ValueError(f"Gauss-Legendre node count must be in [1, {MAX_GAUSS_LEGENDRE_NODES}], got {n}")

    half = (n + 1) // 2
    i = np.arange(1, half + 1, dtype=np.float64)
    x = np.cos(np.pi * (i - 0.25) / (n + 0.5))
    for _ in range(NEWTON_MAX_ITERATIONS):
        p, dp = _legendre_with_derivative(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < NEWTON_TOLERANCE:
            break
    else:
        raise RuntimeError(f"Newton iteration for Gauss-Legendre n={n} did not converge")

    if n % 2:
        x[-1] = 0.0
    _, dp = _legendre_with_derivative(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)

    # x is descending and nonnegative; build the ascending symmetric rule.
    nodes = np.concatenate([-x, x[::-1][n % 2:]]) + 0.0
    raw = np.concatenate([w, w[::-1][n % 2:]])
    return AngularQuadrature(nodes=nodes.reshape(-1, 1), raw_weights=raw, weights=raw / 2.0, dimension=1)


def circle_quadrature(n: int) -> AngularQuadrature:
    """Equispaced directions phi_m = 2 pi (m - 1/2) / n on the unit circle, weights 1/n."""
    if n < 4 or n % 2:
        raise ValueError(f"Circle quadrature needs an even node count >= 4, got {n}")
    m = np.arange(1, n + 1, dtype=np.float64)
    phi = 2.0 * np.pi * (m - 0.5) / n
    nodes = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    return AngularQuadrature(
        nodes=nodes,
        raw_weights=np.full(n, 2.0 * np.pi / n),
        weights=np.full(n, 1.0 / n),
        dimension=2,
    )


def quadrature_for(dimension: int, n: int = 16) -> AngularQuadrature:
    if dimension == 1:
        return gauss_legendre(n)
    if dimension == 2:
        return circle_quadrature(n)
    raise ValueError(f"No angular quadrature for spatial dimension {dimension}")


def angular_average(values: Union[np.ndarray, torch.Tensor], quad: AngularQuadrature):
    """
    Weighted average over the last axis, which must enumerate the quadrature nodes.

    Works on numpy arrays and torch tensors (autograd-friendly).
    """
    if values.shape[-1] != quad.size:
        raise ValueError(f"Expected {quad.size} values per point, got {values.shape[-1]}")
    if isinstance(values, torch.Tensor):
        return values @ quad.weights_tensor().to(values.dtype)
    return np.asarray(values, dtype=np.float64) @ quad.weights
