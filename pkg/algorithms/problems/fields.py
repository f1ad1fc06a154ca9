"""
Evaluable transport fields f(t, r, Omega, z)

A field is evaluated on a batch of point rows (t, r, z) paired with every
direction of a node set, and returns a JetTable over (t, x[, y]) whose
entries have shape (N, M): one value per (point, direction) pairing.

    NetworkField          the raw network, inputs (t, r, Omega, z) or
                          (t, sin 2 pi x, cos 2 pi x, mu, z) under the periodic lift
    HardConstraintWrapper multiplier * raw network, or the lifted network
    AnalyticField         any closed-form jet expression (manufactured solutions,
                          monomials used to check the operators)
"""

import logging
import math
from typing import Callable, Iterable, List, Optional, Sequence

import torch

from algorithms.exceptions import ConfigurationError
from algorithms.network.jets import (
    DTYPE,
    JetTable,
    MultiIndex,
    cos_derivatives,
    downward_closure,
    sin_derivatives,
)
from algorithms.network.mlp import NetworkSpec, ParameterVector, propagate_jet
from algorithms.problems.coefficients import (
    PointVariables,
    constant_jet,
    coordinate_jet,
    point_variables,
)
from algorithms.quadrature.angular import AngularQuadrature, angular_average

logger = logging.getLogger(__name__)


def _prepare(problem, points, directions, keys):
    points = torch.as_tensor(points, dtype=DTYPE)
    if points.dim() == 1:
        points = points.unsqueeze(0)
    if points.shape[1] != problem.point_width:
        raise ValueError(f"Expected point rows of width {problem.point_width}, got shape {tuple(points.shape)}")
    directions = torch.as_tensor(directions, dtype=DTYPE).reshape(-1, problem.direction_width)
    keys = downward_closure(list(keys or []) + [MultiIndex.zero(problem.n_vars)])
    return points, directions, keys


def _broadcast(jet: JetTable, n: int, m: int) -> JetTable:
    return jet.map(lambda v: torch.broadcast_to(v, (n, m)))


class TransportField:
    """Base class: subclasses implement jet()."""

    def __init__(self, problem):
        self.problem = problem

    def jet(self, points, directions, keys: Optional[Iterable[Sequence[int]]] = None) -> JetTable:
        raise NotImplementedError

    def values(self, points, directions) -> torch.Tensor:
        """f at every (point, direction) pairing: shape (N, M)."""
        return self.jet(points, directions).value

    def density(self, points, quad: AngularQuadrature) -> torch.Tensor:
        """rho = <f> at each point: shape (N,)."""
        return angular_average(self.values(points, quad.nodes_tensor()), quad)


class NetworkField(TransportField):
    """The raw network f~_theta with the problem's input layout."""

    def __init__(self, problem, params: ParameterVector, spec: NetworkSpec, periodic_lift: bool = False):
        super().__init__(problem)
        self.params = params
        self.spec = spec
        self.periodic_lift = periodic_lift

    def features(self, points: torch.Tensor, directions: torch.Tensor, keys: List[MultiIndex]) -> JetTable:
        problem = self.problem
        n, m = points.shape[0], directions.shape[0]
        n_vars = problem.n_vars
        d = problem.dimension
        columns = [coordinate_jet(points[:, 0:1], 0, n_vars, keys)]
        if self.periodic_lift:
            lo, hi = problem.domain[0]
            x_hat = torch.remainder((points[:, 1:2] - lo) / (hi - lo), 1.0)
            phase = coordinate_jet(2.0 * math.pi * x_hat, 1, n_vars, keys, slope=2.0 * math.pi / (hi - lo))
            columns += [phase.apply(sin_derivatives), phase.apply(cos_derivatives)]
        else:
            columns += [coordinate_jet(points[:, 1 + a:2 + a], 1 + a, n_vars, keys) for a in range(d)]
        columns += [constant_jet(directions[:, k].unsqueeze(0), n_vars, keys) for k in range(directions.shape[1])]
        columns += [constant_jet(points[:, 1 + d + k:2 + d + k], n_vars, keys) for k in range(problem.uq_dim)]
        stacked = JetTable.stack([_broadcast(c, n, m) for c in columns])
        return stacked.map(lambda v: v.reshape(n * m, -1))

    def jet(self, points, directions, keys=None) -> JetTable:
        points, directions, keys = _prepare(self.problem, points, directions, keys)
        n, m = points.shape[0], directions.shape[0]
        inputs = self.features(points, directions, keys)
        out = propagate_jet(self.params, self.spec, inputs)
        return out.map(lambda v: v.reshape(n, m))


class HardConstraintWrapper(TransportField):
    """
    Raw network with boundary/initial data built in.

    periodic_lift       the raw network already sees (sin 2 pi x, cos 2 pi x)
    uq_txx              (t - t0)(x - x_L)(x_R - x) f~
    box2d_relu_product  (t - t0)(x^ + R(-xi)^2)(1 - x^ + R(xi)^2)(y^ + R(-eta)^2)(1 - y^ + R(eta)^2) f~
                        with x^, y^ the box coordinates scaled to [0, 1] and R = relu
    """

    def __init__(self, kind: str, network: NetworkField):
        super().__init__(network.problem)
        self.kind = kind
        self.network = network

    def multiplier(self, points: torch.Tensor, directions: torch.Tensor, keys: List[MultiIndex]) -> JetTable:
        problem = self.problem
        n_vars = problem.n_vars
        t0 = problem.time_interval[0]
        factor = coordinate_jet(points[:, 0:1] - t0, 0, n_vars, keys)
        if self.kind == 'uq_txx':
            lo, hi = problem.domain[0]
            x = coordinate_jet(points[:, 1:2], 1, n_vars, keys)
            return factor * (x - lo) * (hi - x)
        for axis in range(2):
            lo, hi = problem.domain[axis]
            scaled = coordinate_jet((points[:, 1 + axis:2 + axis] - lo) / (hi - lo), 1 + axis, n_vars, keys,
                                    slope=1.0 / (hi - lo))
            component = directions[:, axis].unsqueeze(0)
            low_face = torch.relu(-component) ** 2
            high_face = torch.relu(component) ** 2
            factor = factor * (scaled + low_face) * ((1.0 - scaled) + high_face)
        return factor

    def jet(self, points, directions, keys=None) -> JetTable:
        points, directions, keys = _prepare(self.problem, points, directions, keys)
        raw = self.network.jet(points, directions, keys)
        if self.kind == 'periodic_lift':
            return raw
        n, m = points.shape[0], directions.shape[0]
        return _broadcast(self.multiplier(points, directions, keys), n, m) * raw


class AnalyticField(TransportField):
    """
    A field given in closed form.

    `expression(v)` receives PointVariables (jets of t, x[, y] with (N, 1)
    entries, v.mu / v.direction(k) as (1, M) tensors, v.z as (N, d)) and
    returns a JetTable or tensor broadcastable to (N, M).
    """

    def __init__(self, problem, expression: Callable[[PointVariables], object], name: str = 'analytic'):
        super().__init__(problem)
        self.expression = expression
        self.name = name

    def jet(self, points, directions, keys=None) -> JetTable:
        points, directions, keys = _prepare(self.problem, points, directions, keys)
        n, m = points.shape[0], directions.shape[0]
        v = point_variables(points, self.problem.dimension, keys, directions, self.problem.epsilon)
        return _broadcast(v.as_jet(self.expression(v)), n, m)


def constrained_network(problem, params: ParameterVector, spec: NetworkSpec) -> TransportField:
    """
    The network field f_theta for a problem, hard constraint applied.

    Raises:
        ConfigurationError: network input width does not fit the problem layout
    """
    if spec.input_width != problem.network_input_width:
        raise ConfigurationError(
            f"Problem '{problem.id}' with hard constraint '{problem.hard_constraint}' needs "
            f"{problem.network_input_width} network inputs, network has {spec.input_width}"
        )
    if spec.output_width != 1:
        raise ConfigurationError(f"Transport networks have one output, got {spec.output_width}")
    kind = problem.hard_constraint
    network = NetworkField(problem, params, spec, periodic_lift=kind == 'periodic_lift')
    if kind == 'none':
        return network
    return HardConstraintWrapper(kind, network)
