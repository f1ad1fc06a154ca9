"""
Transfer problem definitions

A ProblemConfig is one instance of the scaled linear transport equation

    eps^2 d_t f + eps Omega . grad_r f = sigma (<f> - f) - eps^2 alpha f + eps^2 G

on tau x D x S, D a box in 1D or 2D, with isotropic inflow or periodic
boundary data, initial data and an optional random input z in [-1, 1]^d.
Instances are immutable and freely shared.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

import torch

from algorithms.exceptions import ConfigurationError
from algorithms.network.jets import DTYPE
from algorithms.problems.coefficients import CoefficientField

logger = logging.getLogger(__name__)

BOUNDARY_KINDS = ('inflow', 'periodic')
INITIAL_KINDS = ('constant', 'cosine_maxwellian')
HARD_CONSTRAINTS = ('none', 'periodic_lift', 'box2d_relu_product', 'uq_txx')
FACE_NAMES = ('x_lo', 'x_hi', 'y_lo', 'y_hi')


@dataclass(frozen=True)
class BoundaryCondition:
    """
    Isotropic inflow values per face, or periodic closure.

    Inflow values apply to directions with Omega . n < 0 only; outgoing
    directions are never prescribed.
    """
    kind: str = 'inflow'
    x_lo: float = 0.0
    x_hi: float = 0.0
    y_lo: float = 0.0
    y_hi: float = 0.0

    def __post_init__(self):
        if self.kind not in BOUNDARY_KINDS:
            raise ConfigurationError(f"Unknown boundary kind '{self.kind}'. Use one of: {', '.join(BOUNDARY_KINDS)}")

    @property
    def periodic(self) -> bool:
        return self.kind == 'periodic'

    def face_value(self, axis: int, side: str) -> float:
        return getattr(self, f"{'xy'[axis]}_{side}")

    def to_dict(self, dimension: int) -> Dict:
        data = {'kind': self.kind}
        if self.kind == 'inflow':
            for name in FACE_NAMES[:2 * dimension]:
                data[name] = getattr(self, name)
        return data


@dataclass(frozen=True)
class InitialData:
    """f(0, r, Omega): a constant, or (1 + cos 4 pi x) e^(-mu^2/2) / sqrt(2 pi)."""
    kind: str = 'constant'
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in INITIAL_KINDS:
            raise ConfigurationError(f"Unknown initial data kind '{self.kind}'. Use one of: {', '.join(INITIAL_KINDS)}")

    def evaluate(self, problem: "ProblemConfig", points, directions) -> torch.Tensor:
        """Initial values at point rows (t, r, z) for every direction: shape (N, M)."""
        points = torch.as_tensor(points, dtype=DTYPE)
        directions = torch.as_tensor(directions, dtype=DTYPE).reshape(-1, problem.direction_width)
        n, m = points.shape[0], directions.shape[0]
        if self.kind == 'constant':
            return torch.full((n, m), float(self.value), dtype=DTYPE)
        lo, hi = problem.domain[0]
        x_hat = (points[:, 1:2] - lo) / (hi - lo)
        mu = directions[:, 0].unsqueeze(0)
        return (1.0 + torch.cos(4.0 * math.pi * x_hat)) / math.sqrt(2.0 * math.pi) * torch.exp(-0.5 * mu * mu)

    def to_dict(self) -> Dict:
        return {'kind': self.kind, 'value': self.value}


@dataclass(frozen=True)
class ProblemConfig:
    id: str
    dimension: int
    epsilon: float
    domain: Tuple[Tuple[float, float], ...]
    time_interval: Tuple[float, float]
    sigma: CoefficientField = field(default_factory=lambda: CoefficientField.constant(1.0))
    alpha: CoefficientField = field(default_factory=lambda: CoefficientField.constant(0.0))
    source: CoefficientField = field(default_factory=lambda: CoefficientField.constant(0.0))
    boundary: BoundaryCondition = field(default_factory=BoundaryCondition)
    initial: InitialData = field(default_factory=InitialData)
    uq_dim: int = 0
    hard_constraint: str = 'none'
    output_activation: str = 'exp_negative'
    snapshots: Tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'domain', tuple((float(lo), float(hi)) for lo, hi in self.domain))
        object.__setattr__(self, 'time_interval', tuple(float(v) for v in self.time_interval))
        object.__setattr__(self, 'snapshots', tuple(float(v) for v in self.snapshots))

        if self.dimension not in (1, 2):
            raise ConfigurationError(f"Problem '{self.id}': dimension must be 1 or 2, got {self.dimension}")
        if not self.epsilon > 0.0:
            raise ConfigurationError(f"Problem '{self.id}': epsilon must be positive, got {self.epsilon}")
        if len(self.domain) != self.dimension:
            raise ConfigurationError(
                f"Problem '{self.id}': domain needs {self.dimension} intervals, got {len(self.domain)}"
            )
        for lo, hi in self.domain:
            if not hi > lo:
                raise ConfigurationError(f"Problem '{self.id}': degenerate domain interval ({lo}, {hi})")
        t0, t1 = self.time_interval
        if not t1 > t0:
            raise ConfigurationError(f"Problem '{self.id}': degenerate time interval ({t0}, {t1})")
        if self.uq_dim < 0:
            raise ConfigurationError(f"Problem '{self.id}': uq_dim must be nonnegative, got {self.uq_dim}")
        if self.hard_constraint not in HARD_CONSTRAINTS:
            raise ConfigurationError(
                f"Problem '{self.id}': unknown hard constraint '{self.hard_constraint}'. "
                f"Use one of: {', '.join(HARD_CONSTRAINTS)}"
            )
        if self.hard_constraint == 'periodic_lift' and (self.dimension != 1 or not self.boundary.periodic):
            raise ConfigurationError(f"Problem '{self.id}': periodic_lift needs a 1D periodic problem")
        if self.hard_constraint == 'box2d_relu_product' and self.dimension != 2:
            raise ConfigurationError(f"Problem '{self.id}': box2d_relu_product needs a 2D problem")
        if self.hard_constraint == 'uq_txx' and self.dimension != 1:
            raise ConfigurationError(f"Problem '{self.id}': uq_txx needs a 1D problem")
        if self.initial.kind == 'cosine_maxwellian' and self.dimension != 1:
            raise ConfigurationError(f"Problem '{self.id}': cosine_maxwellian initial data is 1D only")
        for name in ('sigma', 'alpha', 'source'):
            coefficient = getattr(self, name)
            if coefficient.is_random and self.uq_dim == 0:
                raise ConfigurationError(f"Problem '{self.id}': {name} of kind '{coefficient.kind}' needs uq_dim > 0")
            if coefficient.depends_on_direction and name != 'source':
                raise ConfigurationError(f"Problem '{self.id}': only the source may depend on the direction")
        if any(not t0 <= s <= t1 for s in self.snapshots):
            raise ConfigurationError(f"Problem '{self.id}': snapshots {list(self.snapshots)} leave ({t0}, {t1})")

    # LAYOUT

    @property
    def n_vars(self) -> int:
        """Differentiation variables (t, x[, y])."""
        return 1 + self.dimension

    @property
    def point_width(self) -> int:
        """Columns of a point row (t, x[, y], z_1..z_d)."""
        return 1 + self.dimension + self.uq_dim

    @property
    def direction_width(self) -> int:
        return 1 if self.dimension == 1 else 2

    @property
    def second_moment(self) -> float:
        return 1.0 / 3.0 if self.dimension == 1 else 0.5

    @property
    def network_input_width(self) -> int:
        """m_0 of the raw network: (t, r or its periodic lift, Omega, z)."""
        spatial = 2 if self.hard_constraint == 'periodic_lift' else self.dimension
        return 1 + spatial + self.direction_width + self.uq_dim

    def with_changes(self, **changes) -> "ProblemConfig":
        return replace(self, **changes)

    def to_dict(self) -> Dict:
        return {
            'id': self.id,
            'dimension': self.dimension,
            'epsilon': self.epsilon,
            'domain': [list(b) for b in self.domain],
            'time_interval': list(self.time_interval),
            'uq_dim': self.uq_dim,
            'hard_constraint': self.hard_constraint,
            'output_activation': self.output_activation,
            'snapshots': list(self.snapshots),
            'sigma': self.sigma.to_dict(),
            'alpha': self.alpha.to_dict(),
            'source': self.source.to_dict(),
            'boundary': self.boundary.to_dict(self.dimension),
            'initial': self.initial.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict, base: Optional["ProblemConfig"] = None) -> "ProblemConfig":
        """Build from a plain dict; keys absent from data are taken from base."""
        def pick(key, default=None):
            if key in data:
                return data[key]
            return getattr(base, key) if base is not None else default

        def coefficient(key, default):
            if key in data:
                return CoefficientField.from_dict(data[key])
            return getattr(base, key) if base is not None else default

        boundary = pick('boundary', BoundaryCondition())
        if isinstance(boundary, dict):
            boundary = BoundaryCondition(**boundary)
        initial = pick('initial', InitialData())
        if isinstance(initial, dict):
            initial = InitialData(**initial)
        missing = [key for key in ('id', 'dimension', 'epsilon', 'domain', 'time_interval') if pick(key) is None]
        if missing:
            raise ConfigurationError(f"Problem definition lacks {', '.join(missing)}")
        return cls(
            id=pick('id'),
            dimension=int(pick('dimension')),
            epsilon=float(pick('epsilon')),
            domain=tuple(tuple(b) for b in pick('domain')),
            time_interval=tuple(pick('time_interval')),
            sigma=coefficient('sigma', CoefficientField.constant(1.0)),
            alpha=coefficient('alpha', CoefficientField.constant(0.0)),
            source=coefficient('source', CoefficientField.constant(0.0)),
            boundary=boundary,
            initial=initial,
            uq_dim=int(pick('uq_dim', 0)),
            hard_constraint=pick('hard_constraint', 'none'),
            output_activation=pick('output_activation', 'exp_negative'),
            snapshots=tuple(pick('snapshots', ())),
        )
