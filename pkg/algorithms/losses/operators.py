"""
Transport residual and the macroscopic auxiliary equation

With s = 1/sigma, D = Omega . grad_r and L f = d_t f + alpha f - G, a smooth
solution of the transport equation satisfies

    d_t rho - <Omega^2> div(s grad rho) + alpha rho - <G> - eps <sigma A> - eps^2 <sigma B> = 0

where rho = <f> and

    A = s d_t(s D f) + s D(s (L f - D(s D f)))
    B = s^2 d_t(L f) - s D(s D(s L f))

All operators act on field jets over (t, x[, y]) with entries (N, M), one
value per (point, direction) pairing; third-order entries are needed for A
and B, second order for the diffusion term, first order for the transport
residual. Coefficient jets enter through the same arithmetic, so varying
sigma contributes its derivatives exactly.
"""

import logging
from typing import Optional

import torch

from algorithms.network.jets import DTYPE, JetTable, multi_indices
from algorithms.problems.coefficients import CoefficientValues, evaluate_coefficients
from algorithms.quadrature.angular import AngularQuadrature

logger = logging.getLogger(__name__)

GOVERNING_ORDER = 1
DIFFUSION_ORDER = 2
AUXILIARY_ORDER = 3
COEFFICIENT_ORDER = 2


def _points(points) -> torch.Tensor:
    points = torch.as_tensor(points, dtype=DTYPE)
    return points.unsqueeze(0) if points.dim() == 1 else points


def _directions(problem, directions) -> torch.Tensor:
    return torch.as_tensor(directions, dtype=DTYPE).reshape(-1, problem.direction_width)


def field_jet(field, problem, points, directions, order: int) -> JetTable:
    return field.jet(points, directions, multi_indices(problem.n_vars, order))


def coefficient_jets(problem, points, directions) -> CoefficientValues:
    return evaluate_coefficients(problem, points, directions, multi_indices(problem.n_vars, COEFFICIENT_ORDER))


def bracket(values: torch.Tensor, quad: AngularQuadrature, n: int) -> torch.Tensor:
    """<values> over the last axis as an (N, 1) column; (N, 1) inputs count as isotropic."""
    weights = quad.weights_tensor()
    return (torch.broadcast_to(values, (n, quad.size)) @ weights).unsqueeze(-1)


def transport_derivative(jet: JetTable, directions: torch.Tensor) -> JetTable:
    """Omega . grad_r of a jet; directions (M, d) broadcast against entries (N, M)."""
    total = None
    for axis in range(directions.shape[1]):
        term = jet.derivative(1 + axis) * directions[:, axis].unsqueeze(0)
        total = term if total is None else total + term
    return total


def _source_operator(jet: JetTable, coefficients: CoefficientValues) -> JetTable:
    # L f = d_t f + alpha f - G
    return jet.derivative(0) + coefficients.alpha * jet - coefficients.source


def apply_A(jet: JetTable, coefficients: CoefficientValues, directions: torch.Tensor) -> torch.Tensor:
    s = coefficients.inverse_sigma
    s_flux = s * transport_derivative(jet, directions)
    inner = _source_operator(jet, coefficients) - transport_derivative(s_flux, directions)
    first = s * s_flux.derivative(0)
    second = s * transport_derivative(s * inner, directions)
    return (first + second).value


def apply_B(jet: JetTable, coefficients: CoefficientValues, directions: torch.Tensor) -> torch.Tensor:
    s = coefficients.inverse_sigma
    source = _source_operator(jet, coefficients)
    first = s * s * source.derivative(0)
    second = s * transport_derivative(s * transport_derivative(s * source, directions), directions)
    return (first - second).value


def governing_from_jet(jet: JetTable, coefficients: CoefficientValues, problem, quad: AngularQuadrature,
                       directions: torch.Tensor) -> torch.Tensor:
    eps = problem.epsilon
    f = jet.value
    n = f.shape[0]
    rho = bracket(f, quad, n)
    flux = transport_derivative(jet, directions).value
    sigma = coefficients.sigma.value
    alpha = coefficients.alpha.value
    source = coefficients.source.value
    return eps * eps * jet.derivative(0).value + eps * flux - sigma * (rho - f) + eps * eps * (alpha * f - source)


def governing_residual(field, problem, points, quad: AngularQuadrature,
                       jet: Optional[JetTable] = None,
                       coefficients: Optional[CoefficientValues] = None) -> torch.Tensor:
    """
    eps^2 d_t f + eps Omega . grad f - sigma (<f> - f) + eps^2 alpha f - eps^2 G

    at every pairing of the points with the quadrature directions: shape (N, M).
    """
    points = _points(points)
    directions = quad.nodes_tensor()
    if jet is None:
        jet = field_jet(field, problem, points, directions, GOVERNING_ORDER)
    if coefficients is None:
        coefficients = coefficient_jets(problem, points, directions)
    return governing_from_jet(jet, coefficients, problem, quad, directions)


def operator_A(field, problem, points, directions, jet: Optional[JetTable] = None,
               coefficients: Optional[CoefficientValues] = None) -> torch.Tensor:
    """The O(eps) auxiliary operator A(f, G) at every (point, direction) pairing."""
    points, directions = _points(points), _directions(problem, directions)
    if jet is None:
        jet = field_jet(field, problem, points, directions, AUXILIARY_ORDER)
    if coefficients is None:
        coefficients = coefficient_jets(problem, points, directions)
    return apply_A(jet, coefficients, directions)


def operator_B(field, problem, points, directions, jet: Optional[JetTable] = None,
               coefficients: Optional[CoefficientValues] = None) -> torch.Tensor:
    """The O(eps^2) auxiliary operator B(f, G) at every (point, direction) pairing."""
    points, directions = _points(points), _directions(problem, directions)
    if jet is None:
        jet = field_jet(field, problem, points, directions, AUXILIARY_ORDER)
    if coefficients is None:
        coefficients = coefficient_jets(problem, points, directions)
    return apply_B(jet, coefficients, directions)


def macro_from_jet(jet: JetTable, coefficients: CoefficientValues, problem, quad: AngularQuadrature,
                   directions: torch.Tensor, include_ab: bool = True) -> torch.Tensor:
    n = jet.value.shape[0]
    rho = jet.map(lambda v: bracket(v, quad, n))
    s = coefficients.inverse_sigma
    diffusion = None
    for axis in range(problem.dimension):
        term = (s * rho.derivative(1 + axis)).derivative(1 + axis)
        diffusion = term if diffusion is None else diffusion + term
    residual = (rho.derivative(0).value - problem.second_moment * diffusion.value
                + coefficients.alpha.value * rho.value - bracket(coefficients.source.value, quad, n))
    if include_ab:
        eps = problem.epsilon
        sigma = coefficients.sigma.value
        residual = (residual
                    - eps * bracket(sigma * apply_A(jet, coefficients, directions), quad, n)
                    - eps * eps * bracket(sigma * apply_B(jet, coefficients, directions), quad, n))
    return residual.squeeze(-1)


def macro_aux_residual(field, problem, points, quad: AngularQuadrature, include_ab: bool = True,
                       jet: Optional[JetTable] = None,
                       coefficients: Optional[CoefficientValues] = None) -> torch.Tensor:
    """
    d_t rho - <Omega^2> div(grad rho / sigma) + alpha rho - <G> - eps <sigma A> - eps^2 <sigma B>

    at each point, rho = <f>: shape (N,). include_ab=False drops the A and B
    terms, leaving the diffusion-limit residual.
    """
    points = _points(points)
    directions = quad.nodes_tensor()
    if jet is None:
        jet = field_jet(field, problem, points, directions, AUXILIARY_ORDER if include_ab else DIFFUSION_ORDER)
    if coefficients is None:
        coefficients = coefficient_jets(problem, points, directions)
    return macro_from_jet(jet, coefficients, problem, quad, directions, include_ab)


def diffusion_residual(field, problem, points, quad: AngularQuadrature, **kwargs) -> torch.Tensor:
    """Residual of the diffusion limit d_t rho - <Omega^2> div(grad rho / sigma) + alpha rho - <G>."""
    return macro_aux_residual(field, problem, points, quad, include_ab=False, **kwargs)
