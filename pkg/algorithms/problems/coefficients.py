"""
Coefficient fields sigma, alpha and G

Coefficients are evaluated as jets over the differentiation variables
(t, x[, y]) so that spatially varying sigma enters 1/sigma and its
derivatives exactly in the diffusion and auxiliary operators. Random-input
kinds depend on z only; the manufactured UQ source also depends on t, x, mu
and reads sigma from the point variables.

Kinds:
    constant              c
    polynomial_1p10x_sq   1 + (10 x)^2
    cosine_random         1 + a sum_i cos(pi z_i)
    sine_product_random   1 + a prod_i sin(pi z_i)
    uq_manufactured       source making t x (1 - x)(mu + 11 + sum z) / 22 exact
    expression            a callable registered under a name
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import torch

from algorithms.exceptions import CoefficientError, ConfigurationError
from algorithms.network.jets import DTYPE, JetTable, MultiIndex, downward_closure, multi_indices

logger = logging.getLogger(__name__)

COEFFICIENT_KINDS = (
    'constant',
    'polynomial_1p10x_sq',
    'cosine_random',
    'sine_product_random',
    'uq_manufactured',
    'expression',
)

DEFAULT_VALUES = {
    'constant': 0.0,
    'cosine_random': 0.1,
    'sine_product_random': 0.1,
}

JetLike = Union[JetTable, torch.Tensor, float]

EXPRESSIONS: Dict[str, Callable[["PointVariables"], JetLike]] = {}


def register_expression(name: str):
    """Decorator registering a coefficient callable usable as kind 'expression'."""
    def decorator(fn: Callable[["PointVariables"], JetLike]):
        EXPRESSIONS[name] = fn
        return fn
    return decorator


# POINT VARIABLES

def coordinate_jet(values: torch.Tensor, var: int, n_vars: int, keys: Iterable[MultiIndex],
                   slope: float = 1.0) -> JetTable:
    """Jet of a coordinate (scaled by slope) with entries shaped like `values`."""
    unit = MultiIndex.unit(var, n_vars)
    entries = {}
    for alpha in keys:
        if alpha.order == 0:
            entries[alpha] = values
        elif alpha == unit:
            entries[alpha] = torch.full_like(values, slope)
        else:
            entries[alpha] = torch.zeros_like(values)
    return JetTable(entries, n_vars)


def constant_jet(values: torch.Tensor, n_vars: int, keys: Iterable[MultiIndex]) -> JetTable:
    zeros = torch.zeros_like(values)
    return JetTable({alpha: values if alpha.order == 0 else zeros for alpha in keys}, n_vars)


@dataclass(eq=False)
class PointVariables:
    """
    Jets of t and the spatial coordinates at a batch of points.

    Coordinate jets have entries of shape (N, 1); directions enter as (1, M)
    tensors and z as an (N, d) tensor, so jet * tensor broadcasts to (N, M).
    """
    t: JetTable
    space: List[JetTable]
    directions: Optional[torch.Tensor]
    z: torch.Tensor
    epsilon: float
    keys: List[MultiIndex]
    sigma: Optional[JetTable] = None

    @property
    def n_vars(self) -> int:
        return self.t.n_vars

    @property
    def n_points(self) -> int:
        return self.t.value.shape[0]

    @property
    def x(self) -> JetTable:
        return self.space[0]

    @property
    def y(self) -> JetTable:
        if len(self.space) < 2:
            raise ValueError("The y coordinate exists only for 2D problems")
        return self.space[1]

    def direction(self, component: int) -> torch.Tensor:
        if self.directions is None:
            raise ValueError("This coefficient depends on the direction; evaluate it with directions")
        return self.directions[:, component].unsqueeze(0)

    @property
    def mu(self) -> torch.Tensor:
        return self.direction(0)

    @property
    def z_sum(self) -> torch.Tensor:
        return self.z.sum(dim=1, keepdim=True)

    def constant(self, value) -> JetTable:
        values = torch.as_tensor(value, dtype=DTYPE)
        if values.dim() == 0:
            values = values.expand(self.n_points, 1)
        return constant_jet(values, self.n_vars, self.keys)

    def as_jet(self, value: JetLike) -> JetTable:
        return value if isinstance(value, JetTable) else self.constant(value)


def point_variables(points, dimension: int, keys: Optional[Iterable[Sequence[int]]] = None,
                    directions=None, epsilon: float = 1.0) -> PointVariables:
    """Build PointVariables for rows (t, x[, y], z...) and the requested derivative keys."""
    points = torch.as_tensor(points, dtype=DTYPE)
    if points.dim() != 2 or points.shape[1] < 1 + dimension:
        raise ValueError(f"Expected point rows (t, r, z), got shape {tuple(points.shape)}")
    n_vars = 1 + dimension
    keys = downward_closure(list(keys or []) + [MultiIndex.zero(n_vars)])
    t = coordinate_jet(points[:, 0:1], 0, n_vars, keys)
    space = [coordinate_jet(points[:, 1 + a:2 + a], 1 + a, n_vars, keys) for a in range(dimension)]
    if directions is not None:
        directions = torch.as_tensor(directions, dtype=DTYPE)
        if directions.dim() == 1:
            directions = directions.unsqueeze(1)
    return PointVariables(t, space, directions, points[:, 1 + dimension:], epsilon, keys)


# COEFFICIENT FIELDS

@dataclass(frozen=True)
class CoefficientField:
    kind: str = 'constant'
    value: float = 0.0
    name: Optional[str] = None

    def __post_init__(self):
        if self.kind not in COEFFICIENT_KINDS:
            raise ConfigurationError(
                f"Unknown coefficient kind '{self.kind}'. Use one of: {', '.join(COEFFICIENT_KINDS)}"
            )
        if self.kind == 'expression' and not self.name:
            raise ConfigurationError("Coefficient kind 'expression' needs a name")

    @classmethod
    def constant(cls, value: float) -> "CoefficientField":
        return cls('constant', float(value))

    @classmethod
    def of_kind(cls, kind: str, value: Optional[float] = None, name: Optional[str] = None) -> "CoefficientField":
        return cls(kind, DEFAULT_VALUES.get(kind, 0.0) if value is None else float(value), name)

    @property
    def is_random(self) -> bool:
        return self.kind in ('cosine_random', 'sine_product_random', 'uq_manufactured')

    @property
    def depends_on_direction(self) -> bool:
        return self.kind == 'uq_manufactured'

    def evaluate(self, v: PointVariables) -> JetTable:
        """Jet of the coefficient at the points of v (entries (N, 1), or (N, M) if direction-dependent)."""
        if self.kind == 'constant':
            return v.constant(self.value)
        if self.kind == 'polynomial_1p10x_sq':
            x10 = v.x * 10.0
            return x10 * x10 + 1.0
        if self.kind == 'cosine_random':
            return v.constant(1.0 + self.value * torch.cos(math.pi * v.z).sum(dim=1, keepdim=True))
        if self.kind == 'sine_product_random':
            return v.constant(1.0 + self.value * torch.sin(math.pi * v.z).prod(dim=1, keepdim=True))
        if self.kind == 'uq_manufactured':
            return _manufactured_source(v)
        fn = EXPRESSIONS.get(self.name)
        if fn is None:
            raise ConfigurationError(
                f"No coefficient expression registered as '{self.name}'. Known: {', '.join(sorted(EXPRESSIONS)) or 'none'}"
            )
        return v.as_jet(fn(v))

    def to_dict(self) -> Dict:
        data = {'kind': self.kind, 'value': self.value}
        if self.name:
            data['name'] = self.name
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "CoefficientField":
        kind = data.get('kind', 'constant')
        return cls.of_kind(kind, data.get('value'), data.get('name'))


def _manufactured_source(v: PointVariables) -> JetTable:
    # G = d_t f + mu d_x f / eps + sigma (f - <f>) / eps^2 for f = t x (1-x) c / 22, c = mu + 11 + sum z
    if v.sigma is None:
        raise ValueError("The manufactured source needs sigma in the point variables")
    eps = v.epsilon
    c = v.mu + 11.0 + v.z_sum
    bump = v.x * (1.0 - v.x)
    time_part = bump * (c / 22.0)
    flux_part = v.t * (1.0 - v.x * 2.0) * (v.mu * c / (22.0 * eps))
    collision_part = v.sigma * v.t * bump * (v.mu / (22.0 * eps * eps))
    return time_part + flux_part + collision_part


@dataclass(eq=False)
class CoefficientValues:
    """sigma, alpha, G and 1/sigma as jets at a batch of points."""
    sigma: JetTable
    alpha: JetTable
    source: Optional[JetTable]
    inverse_sigma: Optional[JetTable]
    variables: PointVariables

    def nu(self, epsilon: float) -> torch.Tensor:
        """sigma / eps^2 + alpha at the points."""
        return self.sigma.value / (epsilon * epsilon) + self.alpha.value


def evaluate_coefficients(problem, points, directions=None,
                          keys: Optional[Iterable[Sequence[int]]] = None,
                          require_positive_sigma: bool = True) -> CoefficientValues:
    """
    Evaluate sigma, alpha and G at points (t, r, z) as jets over (t, r).

    keys defaults to every derivative up to second order, which is what the
    diffusion term needs of 1/sigma. A source that depends on the direction
    (the manufactured UQ source) is left as None when no directions are given.

    require_positive_sigma=False admits sigma = 0 (free streaming in the
    discrete-ordinates solver); 1/sigma is then not formed.

    Raises:
        CoefficientError: sigma <= 0 at some point
    """
    if keys is None:
        keys = multi_indices(1 + problem.dimension, 2)
    v = point_variables(points, problem.dimension, keys, directions, problem.epsilon)
    sigma = problem.sigma.evaluate(v)
    admissible = sigma.value > 0.0 if require_positive_sigma else sigma.value >= 0.0
    bad = ~admissible.reshape(sigma.value.shape[0], -1).all(dim=1)
    if bool(bad.any()):
        index = int(torch.nonzero(bad)[0])
        row = np.asarray(torch.as_tensor(points, dtype=DTYPE)[index].detach()).tolist()
        raise CoefficientError(
            f"Scattering coefficient sigma must be {'positive' if require_positive_sigma else 'nonnegative'}, "
            f"got {float(sigma.value[index].min())} at point {row}"
        )
    v.sigma = sigma
    alpha = problem.alpha.evaluate(v)
    source = None
    if directions is not None or not problem.source.depends_on_direction:
        source = problem.source.evaluate(v)
    inverse = sigma.reciprocal() if require_positive_sigma else None
    return CoefficientValues(sigma, alpha, source, inverse, v)
