"""
Finite-volume solvers for the diffusion limit

    d_t rho = <Omega^2> div((1/sigma) grad rho) - alpha rho + <G>

on a cell-centered grid with harmonic-mean face coefficients. Dirichlet
values come from the isotropic inflow data and act half a cell outside the
first and last centers; periodic problems wrap the stencil. Time stepping is
Crank-Nicolson after two backward-Euler steps. In 1D without periodic
closure the systems are tridiagonal and go to LAPACK's banded solver; all
other systems are factored once by sparse LU.

sigma and alpha are taken at the start time; G is re-evaluated every step
when it depends on t.
"""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np
import torch
from scipy import sparse
from scipy.linalg import LinAlgError, solve_banded
from scipy.sparse.linalg import splu

from algorithms.exceptions import SolverError
from algorithms.network.jets import DTYPE
from algorithms.problems.coefficients import evaluate_coefficients
from algorithms.quadrature.angular import quadrature_for
from algorithms.solvers.fields import Grid, Grid1D, Grid2D, ReferenceField, snap_times
from algorithms.solvers.transport import fixed_random_inputs, grid_rows

logger = logging.getLogger(__name__)

STARTUP_EULER_STEPS = 2
MAX_DIFFUSIVE_EPSILON = 1e-2
MC_REFERENCE_DRAWS = 256
SOURCE_ANGLES = 16


def harmonic_mean(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return 2.0 * a * b / (a + b)


class _Factored:
    """A fixed matrix ready for repeated solves."""

    def __init__(self, matrix: sparse.spmatrix, tridiagonal: bool):
        self.tridiagonal = tridiagonal
        if tridiagonal:
            n = matrix.shape[0]
            self.bands = np.zeros((3, n))
            self.bands[0, 1:] = matrix.diagonal(1)
            self.bands[1] = matrix.diagonal(0)
            self.bands[2, :-1] = matrix.diagonal(-1)
        else:
            try:
                self.lu = splu(sparse.csc_matrix(matrix))
            except RuntimeError as exc:
                raise SolverError(f"Diffusion system is singular ({exc}); check sigma") from exc

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if not self.tridiagonal:
            return self.lu.solve(rhs)
        try:
            return solve_banded((1, 1), self.bands, rhs)
        except LinAlgError as exc:
            raise SolverError(f"Tridiagonal diffusion system is singular ({exc}); check sigma") from exc


# COEFFICIENTS ON THE GRID

def _coefficient_values(problem, rows: np.ndarray, with_source: bool = True):
    rows = torch.as_tensor(rows, dtype=DTYPE)
    directions = None
    quad = None
    if with_source and problem.source.depends_on_direction:
        quad = quadrature_for(problem.dimension, SOURCE_ANGLES)
        directions = quad.nodes_tensor()
    values = evaluate_coefficients(problem, rows, directions, keys=[])
    sigma = values.sigma.value.detach().numpy().reshape(-1)
    alpha = values.alpha.value.detach().numpy().reshape(-1)
    source = None
    if with_source:
        source = values.source.value.detach().numpy()
        source = source @ quad.weights if quad is not None else source.reshape(-1)
    return sigma, alpha, source


def _face_rows(problem, grid: Grid, axis: int, side: str, t: float, z: np.ndarray) -> np.ndarray:
    """Rows at the centers of the boundary faces of one side, ordered like the adjacent cells."""
    centers = list(grid.centers())
    lo, hi = problem.domain[axis]
    picked = [np.take(c, [0 if side == 'lo' else -1], axis=axis) for c in centers]
    picked[axis] = np.full_like(picked[axis], lo if side == 'lo' else hi)
    return grid_rows(t, picked, z)


def assemble_operator(problem, grid: Grid, z: np.ndarray) -> Tuple[sparse.csr_matrix, np.ndarray, np.ndarray]:
    """
    Discrete operator A, boundary forcing b and alpha on the grid.

    d rho/dt = A rho + b + <G> on the flattened cell array (x-major in 2D).
    """
    shape = tuple(grid.shape)
    spacing = (grid.dx,) if isinstance(grid, Grid1D) else grid.spacing
    moment = problem.second_moment
    rows = grid_rows(grid.start_time, grid.centers(), z)
    sigma, alpha, _ = _coefficient_values(problem, rows, with_source=False)
    diffusivity = (moment / sigma).reshape(shape)
    index = np.arange(diffusivity.size).reshape(shape)

    diagonal = -alpha.copy()
    forcing = np.zeros(diffusivity.size)
    row_ids, col_ids, entries = [], [], []

    def couple(i_a: np.ndarray, i_b: np.ndarray, weight: np.ndarray):
        row_ids.extend([i_a, i_b])
        col_ids.extend([i_b, i_a])
        entries.extend([weight, weight])
        np.subtract.at(diagonal, i_a, weight)
        np.subtract.at(diagonal, i_b, weight)

    for axis, h in enumerate(spacing):
        n = shape[axis]
        left = np.take(index, range(n - 1), axis=axis).ravel()
        right = np.take(index, range(1, n), axis=axis).ravel()
        d = diffusivity.ravel()
        couple(left, right, harmonic_mean(d[left], d[right]) / h ** 2)
        first = np.take(index, [0], axis=axis).ravel()
        last = np.take(index, [n - 1], axis=axis).ravel()
        if problem.boundary.periodic:
            couple(last, first, harmonic_mean(d[last], d[first]) / h ** 2)
            continue
        for side, cells in (('lo', first), ('hi', last)):
            face_sigma, _, _ = _coefficient_values(
                problem, _face_rows(problem, grid, axis, side, grid.start_time, z), with_source=False
            )
            weight = 2.0 * (moment / face_sigma) / h ** 2
            diagonal[cells] -= weight
            forcing[cells] += weight * problem.boundary.face_value(axis, side)

    size = diffusivity.size
    operator = sparse.coo_matrix(
        (np.concatenate(entries + [diagonal]),
         (np.concatenate(row_ids + [np.arange(size)]), np.concatenate(col_ids + [np.arange(size)]))),
        shape=(size, size),
    ).tocsr()
    return operator, forcing, alpha


def _evolve(problem, grid: Grid, z: np.ndarray, snapshots, scheme: str) -> ReferenceField:
    operator, boundary, _ = assemble_operator(problem, grid, z)
    steps, times = snap_times(grid, problem.snapshots if snapshots is None else snapshots)
    size = operator.shape[0]
    identity = sparse.identity(size, format='csr')
    tridiagonal = grid.dimension == 1 and not problem.boundary.periodic
    dt = grid.dt
    euler = _Factored(identity - dt * operator, tridiagonal)
    crank = _Factored(identity - 0.5 * dt * operator, tridiagonal)

    centers = grid.centers()
    time_dependent = problem.source.kind in ('uq_manufactured', 'expression')

    def source_at(t: float) -> np.ndarray:
        _, _, source = _coefficient_values(problem, grid_rows(t, centers, z))
        return np.broadcast_to(source, (size,)).copy()

    fixed_source = None if time_dependent else source_at(grid.start_time)

    def forcing_at(t: float) -> np.ndarray:
        return boundary + (source_at(t) if time_dependent else fixed_source)

    rows = torch.as_tensor(grid_rows(grid.start_time, centers, z), dtype=DTYPE)
    quad = quadrature_for(problem.dimension, SOURCE_ANGLES)
    initial = problem.initial.evaluate(problem, rows, quad.nodes_tensor()).detach().numpy()
    rho = initial @ quad.weights

    values = np.empty((len(times), size))
    last = int(steps.max()) if len(steps) else 0
    values[steps == 0] = rho
    previous = forcing_at(grid.start_time)
    for step in range(1, last + 1):
        t = grid.start_time + step * dt
        forcing = forcing_at(t)
        if step <= STARTUP_EULER_STEPS:
            rho = euler.solve(rho + dt * forcing)
        else:
            rho = crank.solve(rho + 0.5 * dt * (operator @ rho) + 0.5 * dt * (previous + forcing))
        previous = forcing
        values[steps == step] = rho

    logger.info(f"Diffusion reference for '{problem.id}' on {grid.shape} cells, {last} steps ({scheme})")
    return ReferenceField(
        times, values.reshape((len(times),) + tuple(grid.shape)), grid, problem.id, scheme,
        metadata={'z': z.tolist(), 'epsilon': problem.epsilon},
    )


def _check_regime(problem):
    if problem.epsilon > MAX_DIFFUSIVE_EPSILON:
        logger.warning(
            f"Problem '{problem.id}': eps = {problem.epsilon} exceeds {MAX_DIFFUSIVE_EPSILON}; "
            f"the diffusion limit ignores O(eps) kinetic effects"
        )


def diffusion_fd_1d(problem, grid: Optional[Grid1D] = None, z: Optional[Sequence[float]] = None,
                    snapshots: Optional[Sequence[float]] = None) -> ReferenceField:
    """
    Crank-Nicolson solution of the 1D diffusion limit at the snapshot times.

    Raises:
        SolverError: a singular system (sigma not bounded away from 0) or a 2D problem
        CoefficientError: sigma <= 0 on the grid
    """
    if problem.dimension != 1:
        raise SolverError(f"Problem '{problem.id}' is {problem.dimension}D; use diffusion_fd_2d")
    _check_regime(problem)
    grid = grid or Grid1D.for_problem(problem)
    return _evolve(problem, grid, fixed_random_inputs(problem, z), snapshots, 'diffusion_fd_1d')


def diffusion_fd_2d(problem, grid: Optional[Grid2D] = None, z: Optional[Sequence[float]] = None,
                    snapshots: Optional[Sequence[float]] = None) -> ReferenceField:
    """Crank-Nicolson solution of the 2D diffusion limit, 5-point stencil, sparse LU."""
    if problem.dimension != 2:
        raise SolverError(f"Problem '{problem.id}' is {problem.dimension}D; use diffusion_fd_1d")
    _check_regime(problem)
    grid = grid or Grid2D.for_problem(problem)
    return _evolve(problem, grid, fixed_random_inputs(problem, z), snapshots, 'diffusion_fd_2d')


def diffusion_expectation_1d(problem, grid: Optional[Grid1D] = None, draws: int = MC_REFERENCE_DRAWS,
                             seed: int = 0, snapshots: Optional[Sequence[float]] = None) -> ReferenceField:
    """
    E[rho] over z ~ U([-1, 1]^d) as a Monte Carlo average of diffusion solves.

    The largest per-cell standard error of the mean is recorded in
    metadata['max_standard_error'].
    """
    if problem.uq_dim == 0:
        raise SolverError(f"Problem '{problem.id}' has no random input to average over")
    if draws < 2:
        raise ValueError(f"Monte Carlo reference needs at least 2 draws, got {draws}")
    grid = grid or Grid1D.for_problem(problem)
    rng = np.random.default_rng(seed)
    samples = rng.uniform(-1.0, 1.0, size=(draws, problem.uq_dim))
    total = None
    squares = None
    for k, z in enumerate(samples):
        field = diffusion_fd_1d(problem, grid, z, snapshots)
        total = field.values.copy() if total is None else total + field.values
        squares = field.values ** 2 if squares is None else squares + field.values ** 2
        if (k + 1) % 64 == 0:
            logger.debug(f"Monte Carlo reference for '{problem.id}': {k + 1}/{draws} draws")
    mean = total / draws
    variance = np.maximum(squares / draws - mean ** 2, 0.0) * draws / (draws - 1)
    standard_error = np.sqrt(variance / draws)
    return ReferenceField(
        field.times, mean, grid, problem.id, 'diffusion_expectation_1d',
        metadata={'draws': draws, 'seed': seed, 'epsilon': problem.epsilon,
                  'max_standard_error': float(standard_error.max()) if standard_error.size else 0.0},
    )
