"""
Collocation point sets

Every empirical loss integral is a mean over Sobol points mapped affinely onto
its domain. Point rows are laid out as (t, x[, y], z_1, ..., z_d); directions
are not sampled but paired with every node of the angular quadrature, so the
angular average <f> at a point reuses the same network evaluations.

Face sets carry the outward normal of their face and the mask of inflow
directions there. Periodic problems get matched pairs (x_lo, x_hi) with
identical remaining coordinates.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from algorithms.quadrature.angular import AngularQuadrature
from algorithms.quadrature.sobol import sobol_points

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SampleCounts:
    """(N_int, N_sb, N_tb, N_c); N_sb counts points per boundary face."""
    n_int: int
    n_sb: int
    n_tb: int
    n_c: int = 0

    def __post_init__(self):
        for name in ('n_int', 'n_sb', 'n_tb', 'n_c'):
            if getattr(self, name) < 0:
                raise ValueError(f"Sample count {name} must be nonnegative, got {getattr(self, name)}")


@dataclass(eq=False)
class FaceSamples:
    """
    Points on one face of the spatial box.

    For inflow faces `points` lie on the face and `inflow` selects the
    directions entering the domain there. For periodic pairs `points` lie on
    the low face and `partner` holds the matching high-face points.
    """
    axis: int
    side: str
    normal: np.ndarray
    points: np.ndarray
    inflow: np.ndarray
    partner: Optional[np.ndarray] = None

    @property
    def periodic(self) -> bool:
        return self.partner is not None

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(eq=False)
class SampleSets:
    interior: np.ndarray
    faces: List[FaceSamples]
    initial: np.ndarray
    conservation: np.ndarray
    dimension: int
    uq_dim: int = 0
    skip: int = 0
    counts: Optional[SampleCounts] = None

    @property
    def point_width(self) -> int:
        return 1 + self.dimension + self.uq_dim

    @property
    def n_boundary(self) -> int:
        return sum(len(face) for face in self.faces)

    def with_interior(self, interior: np.ndarray, skip: int) -> "SampleSets":
        return SampleSets(interior, self.faces, self.initial, self.conservation,
                          self.dimension, self.uq_dim, skip, self.counts)


def _unit_cube(dim: int, count: int, skip: int) -> np.ndarray:
    if dim == 0:
        return np.zeros((count, 0))
    return sobol_points(dim, count, skip)


def _scale(u: np.ndarray, bounds: Sequence[Tuple[float, float]]) -> np.ndarray:
    lo = np.array([b[0] for b in bounds], dtype=np.float64)
    hi = np.array([b[1] for b in bounds], dtype=np.float64)
    return lo + u * (hi - lo)


def _random_inputs(u: np.ndarray) -> np.ndarray:
    return 2.0 * u - 1.0


def interior_points(problem, count: int, skip: int = 0) -> np.ndarray:
    """Sobol points in tau x D x [-1, 1]^d."""
    d = problem.dimension
    u = _unit_cube(1 + d + problem.uq_dim, count, skip)
    bounds = [problem.time_interval] + list(problem.domain)
    return np.concatenate([_scale(u[:, :1 + d], bounds), _random_inputs(u[:, 1 + d:])], axis=1)


def initial_points(problem, count: int, skip: int = 0) -> np.ndarray:
    d = problem.dimension
    u = _unit_cube(d + problem.uq_dim, count, skip)
    t = np.full((count, 1), float(problem.time_interval[0]))
    return np.concatenate([t, _scale(u[:, :d], problem.domain), _random_inputs(u[:, d:])], axis=1)


def conservation_points(problem, count: int, skip: int = 0) -> np.ndarray:
    """(t, z) samples for the mass-conservation residual."""
    u = _unit_cube(1 + problem.uq_dim, count, skip)
    return np.concatenate([_scale(u[:, :1], [problem.time_interval]), _random_inputs(u[:, 1:])], axis=1)


def _face_points(problem, axis: int, value: float, count: int, skip: int) -> np.ndarray:
    d = problem.dimension
    others = [a for a in range(d) if a != axis]
    u = _unit_cube(1 + len(others) + problem.uq_dim, count, skip)
    points = np.zeros((count, 1 + d + problem.uq_dim))
    points[:, 0] = _scale(u[:, :1], [problem.time_interval])[:, 0]
    for k, a in enumerate(others):
        lo, hi = problem.domain[a]
        points[:, 1 + a] = lo + u[:, 1 + k] * (hi - lo)
    points[:, 1 + axis] = value
    points[:, 1 + d:] = _random_inputs(u[:, 1 + len(others):])
    return points


def boundary_faces(problem, count: int, quad: AngularQuadrature, skip: int = 0) -> List[FaceSamples]:
    """N_sb points on every face (inflow) or N_sb matched pairs per axis (periodic)."""
    d = problem.dimension
    faces = []
    if count == 0:
        return faces
    periodic = problem.boundary.kind == 'periodic'
    for axis in range(d):
        lo, hi = problem.domain[axis]
        if periodic:
            points = _face_points(problem, axis, lo, count, skip + axis * count)
            partner = points.copy()
            partner[:, 1 + axis] = hi
            normal = -np.eye(d)[axis]
            faces.append(FaceSamples(axis, 'lo', normal, points, np.ones(quad.size, dtype=bool), partner))
            continue
        for k, (side, value, sign) in enumerate((('lo', lo, -1.0), ('hi', hi, 1.0))):
            normal = sign * np.eye(d)[axis]
            points = _face_points(problem, axis, value, count, skip + (2 * axis + k) * count)
            faces.append(FaceSamples(axis, side, normal, points, quad.inflow_mask(normal)))
    return faces


def sample_domain(problem, counts: SampleCounts, quad: AngularQuadrature, seed_offset: int = 0) -> SampleSets:
    """
    Draw every collocation set for a problem.

    Args:
        problem: ProblemConfig with a box domain
        counts: SampleCounts (N_sb is per face)
        quad: angular rule whose nodes are paired with every point
        seed_offset: Sobol skip; points skip+1, skip+2, ... are used

    Returns:
        SampleSets with interior, face, initial and conservation points
    """
    if seed_offset < 0:
        raise ValueError(f"seed_offset must be nonnegative, got {seed_offset}")
    if quad.dimension != problem.dimension:
        raise ValueError(f"{quad.dimension}D angular rule given for a {problem.dimension}D problem")
    for lo, hi in problem.domain:
        if not hi > lo:
            raise ValueError(f"Sampling needs a nondegenerate box domain, got {list(problem.domain)}")

    sets = SampleSets(
        interior=interior_points(problem, counts.n_int, seed_offset),
        faces=boundary_faces(problem, counts.n_sb, quad, seed_offset),
        initial=initial_points(problem, counts.n_tb, seed_offset),
        conservation=conservation_points(problem, counts.n_c, seed_offset),
        dimension=problem.dimension,
        uq_dim=problem.uq_dim,
        skip=seed_offset,
        counts=counts,
    )
    logger.debug(
        f"Sampled {counts.n_int} interior, {sets.n_boundary} boundary, {counts.n_tb} initial "
        f"and {counts.n_c} conservation points (skip {seed_offset})"
    )
    return sets


def resample_interior(problem, sets: SampleSets, skip: int) -> SampleSets:
    """Replace the interior set with fresh Sobol points starting after `skip`."""
    n = sets.interior.shape[0]
    logger.debug(f"Resampling {n} interior points from Sobol skip {skip}")
    return sets.with_interior(interior_points(problem, n, skip), skip)
