"""
Empirical losses

    ma_apnn              lambda-weighted transport residual + (1 - lambda)-weighted
                         auxiliary residual, boundary and initial terms on f and <f>,
                         optional conservation term
    pinn                 lambda_g times the transport residual, boundary and initial
                         terms on f, optional conservation term
    pinn_plus_diffusion  pinn plus lambda_d times the diffusion-limit residual

Every part is a mean over its sample set; directional residuals are first
averaged over the quadrature directions paired with each sample. A part
whose weight is zero is exactly 0 and never evaluates the field.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
import torch

from algorithms.network.jets import DTYPE, MultiIndex
from algorithms.network.mlp import NetworkSpec, ParameterVector, value_and_grad
from algorithms.problems.fields import constrained_network
from algorithms.losses.operators import (
    AUXILIARY_ORDER,
    DIFFUSION_ORDER,
    GOVERNING_ORDER,
    bracket,
    coefficient_jets,
    field_jet,
    governing_from_jet,
    macro_from_jet,
)
from algorithms.losses.weights import LOSS_MODES, LossHyper, weight_from_nu, weight_pair
from algorithms.quadrature.angular import AngularQuadrature
from algorithms.quadrature.sampling import FaceSamples, SampleSets

logger = logging.getLogger(__name__)

CONSERVATION_CELLS_1D = 128
CONSERVATION_CELLS_2D = 32

PARTS = ('governing', 'macro_aux', 'boundary', 'initial', 'conservation')
TELEMETRY_COLUMNS = ('step',) + PARTS + ('total', 'lambda_min', 'lambda_max', 'seconds')


@dataclass
class LossBreakdown:
    governing: torch.Tensor
    macro_aux: torch.Tensor
    boundary: torch.Tensor
    initial: torch.Tensor
    conservation: torch.Tensor
    total: torch.Tensor
    lambda_min: float = float('nan')
    lambda_max: float = float('nan')

    def as_floats(self) -> Dict[str, float]:
        values = {name: float(getattr(self, name).detach()) for name in PARTS + ('total',)}
        values['lambda_min'] = self.lambda_min
        values['lambda_max'] = self.lambda_max
        return values

    def telemetry_row(self, step: int, seconds: float) -> Dict[str, float]:
        row = {'step': step}
        row.update(self.as_floats())
        row['seconds'] = seconds
        return row


def _zero() -> torch.Tensor:
    return torch.zeros((), dtype=DTYPE)


def sample_mean(values: torch.Tensor, deterministic: bool = False) -> torch.Tensor:
    """Mean of per-sample values; deterministic mode sums in sorted order."""
    values = values.reshape(-1)
    if values.numel() == 0:
        return _zero()
    if deterministic:
        return torch.sort(values).values.cumsum(0)[-1] / values.numel()
    return values.mean()


# BOUNDARY AND INITIAL TERMS

def _inflow_face_terms(field, problem, face: FaceSamples, quad: AngularQuadrature,
                       with_average: bool) -> torch.Tensor:
    directions = quad.nodes_tensor()
    f = field.values(face.points, directions)
    target = problem.boundary.face_value(face.axis, face.side)
    mask = torch.from_numpy(face.inflow)
    weights = quad.weights_tensor() * mask
    weights = weights / weights.sum()
    values = (f - target) ** 2 @ weights
    if with_average:
        values = values + (f @ weights - target) ** 2
    return values


def _periodic_face_terms(field, face: FaceSamples, quad: AngularQuadrature, with_average: bool) -> torch.Tensor:
    directions = quad.nodes_tensor()
    gap = field.values(face.points, directions) - field.values(face.partner, directions)
    values = gap ** 2 @ quad.weights_tensor()
    if with_average:
        values = values + (gap @ quad.weights_tensor()) ** 2
    return values


def boundary_terms(field, problem, samples: SampleSets, quad: AngularQuadrature,
                   with_average: bool = True) -> torch.Tensor:
    """Per-sample boundary residuals over every face, concatenated."""
    pieces = []
    for face in samples.faces:
        if len(face) == 0:
            continue
        if face.periodic:
            pieces.append(_periodic_face_terms(field, face, quad, with_average))
        elif face.inflow.any():
            pieces.append(_inflow_face_terms(field, problem, face, quad, with_average))
    if not pieces:
        return torch.zeros(0, dtype=DTYPE)
    return torch.cat(pieces)


def initial_terms(field, problem, samples: SampleSets, quad: AngularQuadrature,
                  with_average: bool = True) -> torch.Tensor:
    directions = quad.nodes_tensor()
    points = torch.as_tensor(samples.initial, dtype=DTYPE)
    gap = field.values(points, directions) - problem.initial.evaluate(problem, points, directions)
    values = gap ** 2 @ quad.weights_tensor()
    if with_average:
        values = values + (gap @ quad.weights_tensor()) ** 2
    return values


# CONSERVATION

def _midpoints(lo: float, hi: float, cells: int) -> Tuple[np.ndarray, float]:
    h = (hi - lo) / cells
    return lo + h * (np.arange(cells) + 0.5), h


def _expand(samples: np.ndarray, problem, spatial: np.ndarray) -> np.ndarray:
    """Rows (t, r, z) for every (t, z) sample and every spatial node."""
    n, k = samples.shape[0], spatial.shape[0]
    rows = np.empty((n * k, problem.point_width))
    rows[:, 0] = np.repeat(samples[:, 0], k)
    rows[:, 1:1 + problem.dimension] = np.tile(spatial, (n, 1))
    rows[:, 1 + problem.dimension:] = np.repeat(samples[:, 1:], k, axis=0)
    return rows


def _cell_grid(problem) -> Tuple[np.ndarray, float]:
    if problem.dimension == 1:
        x, h = _midpoints(*problem.domain[0], CONSERVATION_CELLS_1D)
        return x.reshape(-1, 1), h
    x, hx = _midpoints(*problem.domain[0], CONSERVATION_CELLS_2D)
    y, hy = _midpoints(*problem.domain[1], CONSERVATION_CELLS_2D)
    xx, yy = np.meshgrid(x, y, indexing='ij')
    return np.stack([xx.ravel(), yy.ravel()], axis=1), hx * hy


def _face_grid(problem) -> List[Tuple[np.ndarray, np.ndarray, float]]:
    """(nodes, outward normal, quadrature weight) per boundary face."""
    if problem.dimension == 1:
        lo, hi = problem.domain[0]
        return [(np.array([[lo]]), np.array([-1.0]), 1.0), (np.array([[hi]]), np.array([1.0]), 1.0)]
    faces = []
    for axis in range(2):
        other = 1 - axis
        along, h = _midpoints(*problem.domain[other], CONSERVATION_CELLS_2D)
        for value, sign in ((problem.domain[axis][0], -1.0), (problem.domain[axis][1], 1.0)):
            nodes = np.empty((along.size, 2))
            nodes[:, axis] = value
            nodes[:, other] = along
            faces.append((nodes, sign * np.eye(2)[axis], h))
    return faces


def conservation_residual(field, problem, samples: SampleSets, quad: AngularQuadrature) -> torch.Tensor:
    """
    Mass balance at each (t, z) sample, spatial integrals by the midpoint rule.

    periodic: d/dt int rho + int alpha rho - int <G>
    inflow:   eps d/dt int rho + sum over faces of int <Omega . n f> + eps int alpha rho - eps int <G>
    """
    conservation = np.asarray(samples.conservation, dtype=np.float64)
    n = conservation.shape[0]
    directions = quad.nodes_tensor()
    cells, h = _cell_grid(problem)
    points = torch.from_numpy(_expand(conservation, problem, cells))
    jet = field.jet(points, directions, [MultiIndex.unit(0, problem.n_vars)])
    coefficients = coefficient_jets(problem, points, directions)
    m = points.shape[0]
    rho_t = bracket(jet.derivative(0).value, quad, m)
    balance = (coefficients.alpha.value * bracket(jet.value, quad, m)
               - bracket(coefficients.source.value, quad, m))
    integral_t = (rho_t.reshape(n, -1).sum(dim=1)) * h
    integral_rest = (balance.reshape(n, -1).sum(dim=1)) * h
    if problem.boundary.periodic:
        return integral_t + integral_rest

    eps = problem.epsilon
    flux = torch.zeros(n, dtype=DTYPE)
    for nodes, normal, weight in _face_grid(problem):
        face_points = torch.from_numpy(_expand(conservation, problem, nodes))
        f = field.values(face_points, directions)
        normal_speed = (directions @ torch.as_tensor(normal, dtype=DTYPE)).unsqueeze(0)
        outflow = (f * normal_speed) @ quad.weights_tensor()
        flux = flux + outflow.reshape(n, -1).sum(dim=1) * weight
    return eps * integral_t + flux + eps * integral_rest


# ASSEMBLY

def _interior_order(mode: str, hyper: LossHyper) -> int:
    if mode == 'ma_apnn':
        return AUXILIARY_ORDER if hyper.include_ab else DIFFUSION_ORDER
    if mode == 'pinn_plus_diffusion':
        return DIFFUSION_ORDER
    return GOVERNING_ORDER


def empirical_loss(field, problem, hyper: LossHyper, samples: SampleSets, quad: AngularQuadrature,
                   mode: str = 'ma_apnn', deterministic: bool = False) -> LossBreakdown:
    """
    Assemble the empirical loss of a field on its sample sets.

    Raises:
        ValueError: unknown mode, or an empty interior set while the interior terms carry weight
    """
    if mode not in LOSS_MODES:
        raise ValueError(f"Unknown loss mode '{mode}'. Use one of: {', '.join(LOSS_MODES)}")
    parts = {name: _zero() for name in PARTS}
    lambda_min = lambda_max = float('nan')

    interior = torch.as_tensor(samples.interior, dtype=DTYPE)
    interior_weighted = mode == 'ma_apnn' or hyper.lambda_g > 0.0 or (
        mode == 'pinn_plus_diffusion' and hyper.lambda_d > 0.0)
    if interior_weighted and interior.shape[0] == 0:
        raise ValueError(f"Loss mode '{mode}' weights the interior residual but the interior sample set is empty")

    if interior_weighted:
        directions = quad.nodes_tensor()
        jet = field_jet(field, problem, interior, directions, _interior_order(mode, hyper))
        coefficients = coefficient_jets(problem, interior, directions)
        governing = governing_from_jet(jet, coefficients, problem, quad, directions)
        squared = governing ** 2
        if mode == 'ma_apnn':
            lam = weight_from_nu(coefficients.nu(problem.epsilon), hyper)
            w_g, w_m = weight_pair(lam, hyper)
            macro = macro_from_jet(jet, coefficients, problem, quad, directions, hyper.include_ab)
            parts['governing'] = sample_mean((w_g * squared) @ quad.weights_tensor(), deterministic)
            parts['macro_aux'] = sample_mean(w_m.reshape(-1) * macro ** 2, deterministic)
            lambda_min, lambda_max = float(lam.min()), float(lam.max())
        else:
            if hyper.lambda_g > 0.0:
                parts['governing'] = hyper.lambda_g * sample_mean(squared @ quad.weights_tensor(), deterministic)
            if mode == 'pinn_plus_diffusion' and hyper.lambda_d > 0.0:
                diffusion = macro_from_jet(jet, coefficients, problem, quad, directions, include_ab=False)
                parts['macro_aux'] = hyper.lambda_d * sample_mean(diffusion ** 2, deterministic)

    with_average = mode == 'ma_apnn'
    if hyper.lambda_b > 0.0 and samples.n_boundary:
        parts['boundary'] = hyper.lambda_b * sample_mean(
            boundary_terms(field, problem, samples, quad, with_average), deterministic)
    if hyper.lambda_i > 0.0 and len(samples.initial):
        parts['initial'] = hyper.lambda_i * sample_mean(
            initial_terms(field, problem, samples, quad, with_average), deterministic)
    if hyper.lambda_c > 0.0 and len(samples.conservation):
        parts['conservation'] = hyper.lambda_c * sample_mean(
            conservation_residual(field, problem, samples, quad) ** 2, deterministic)

    total = parts['governing'] + parts['macro_aux'] + parts['boundary'] + parts['initial'] + parts['conservation']
    return LossBreakdown(total=total, lambda_min=lambda_min, lambda_max=lambda_max, **parts)


def loss_gradient(params: ParameterVector, spec: NetworkSpec, problem, hyper: LossHyper, samples: SampleSets,
                  quad: AngularQuadrature, mode: str = 'ma_apnn', deterministic: bool = False,
                  step: Optional[int] = None) -> Tuple[LossBreakdown, torch.Tensor]:
    """LossBreakdown of the constrained network and the gradient of its total."""
    def closure(theta: ParameterVector) -> LossBreakdown:
        field = constrained_network(problem, theta, spec)
        return empirical_loss(field, problem, hyper, samples, quad, mode, deterministic)

    return value_and_grad(closure, params, step=step)
