"""
Implicit discrete-ordinates transport solver (1D slab)

Backward Euler in time and first-order upwind differences in x on every
Gauss-Legendre ordinate:

    eps^2 (f^{n+1} - f^n) / dt + eps mu D_up f^{n+1} + (sigma + eps^2 alpha) f^{n+1}
        = sigma rho^{n+1} + eps^2 G^{n+1}

The scattering term is lagged by source iteration: each sweep solves one
bidiagonal system per ordinate with the current rho, then updates rho from
the new intensities until rho changes by less than the tolerance. The
per-ordinate matrices do not change in time and are factored once.

Intended for eps >= 0.1; the iteration slows down as sigma dt / eps^2 grows,
and small eps belongs to the diffusion solver.
"""

import logging
from typing import List, Optional, Sequence

import numpy as np
import torch
from scipy import sparse
from scipy.sparse.linalg import splu

from algorithms.exceptions import SolverError
from algorithms.network.jets import DTYPE
from algorithms.problems.coefficients import evaluate_coefficients
from algorithms.quadrature.angular import AngularQuadrature, gauss_legendre
from algorithms.solvers.fields import Grid1D, ReferenceField, snap_times

logger = logging.getLogger(__name__)

SOURCE_ITERATION_TOLERANCE = 1e-10
MAX_SWEEPS = 10_000
MIN_KINETIC_EPSILON = 0.1


def fixed_random_inputs(problem, z: Optional[Sequence[float]] = None) -> np.ndarray:
    """The random input used by a deterministic solve; zeros when none is given."""
    if z is None:
        return np.zeros(problem.uq_dim)
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    if z.shape[0] != problem.uq_dim:
        raise ValueError(f"Problem '{problem.id}' has uq_dim {problem.uq_dim}, got z of length {z.shape[0]}")
    return z


def grid_rows(t: float, centers: Sequence[np.ndarray], z: np.ndarray) -> np.ndarray:
    """Point rows (t, x[, y], z) at flattened cell centers."""
    flat = [c.reshape(-1) for c in centers]
    n = flat[0].shape[0]
    return np.column_stack([np.full(n, t)] + flat + [np.tile(z, (n, 1))])


def _ordinate_matrix(mu: float, speed: float, diagonal: np.ndarray, periodic: bool) -> sparse.csc_matrix:
    n = diagonal.shape[0]
    matrix = sparse.lil_matrix((n, n))
    matrix.setdiag(diagonal + speed)
    if mu > 0.0:
        matrix.setdiag(-speed * np.ones(n - 1), -1)
        if periodic:
            matrix[0, n - 1] = -speed
    elif mu < 0.0:
        matrix.setdiag(-speed * np.ones(n - 1), 1)
        if periodic:
            matrix[n - 1, 0] = -speed
    return matrix.tocsc()


def sn_transport_1d(problem, grid: Optional[Grid1D] = None, quad: Optional[AngularQuadrature] = None,
                    z: Optional[Sequence[float]] = None, snapshots: Optional[Sequence[float]] = None,
                    allow_small_epsilon: bool = False, return_intensity: bool = False,
                    tolerance: float = SOURCE_ITERATION_TOLERANCE, max_sweeps: int = MAX_SWEEPS) -> ReferenceField:
    """
    Solve a 1D problem by implicit S_N and return rho at the snapshot times.

    Args:
        problem: 1D ProblemConfig with inflow or periodic boundary
        grid: space-time grid, Grid1D.for_problem(problem) by default
        quad: Gauss-Legendre rule, 16 nodes by default
        z: fixed random input for uq problems (zeros by default)
        snapshots: times to record, problem.snapshots by default
        allow_small_epsilon: admit eps < 0.1 for validation studies
        return_intensity: also keep f at the snapshots as ReferenceField.intensity

    Raises:
        SolverError: eps below the kinetic range, 2D problems, or a source
            iteration that does not converge within max_sweeps
    """
    if problem.dimension != 1:
        raise SolverError(f"Problem '{problem.id}': the discrete-ordinates solver handles 1D problems only")
    eps = problem.epsilon
    if eps < MIN_KINETIC_EPSILON:
        if not allow_small_epsilon:
            raise SolverError(
                f"Problem '{problem.id}': eps = {eps} is below {MIN_KINETIC_EPSILON}; "
                f"use diffusion_fd_1d for the diffusive regime"
            )
        logger.warning(f"Running the discrete-ordinates solver at eps = {eps} for '{problem.id}'")
    grid = grid or Grid1D.for_problem(problem)
    quad = quad or gauss_legendre(16)
    z = fixed_random_inputs(problem, z)
    snapshots = problem.snapshots if snapshots is None else snapshots
    steps, times = snap_times(grid, snapshots)

    (x,) = grid.centers()
    mu = quad.nodes[:, 0]
    weights = quad.weights
    directions = torch.as_tensor(quad.nodes, dtype=DTYPE)
    periodic = problem.boundary.periodic

    def coefficients_at(t: float):
        rows = torch.as_tensor(grid_rows(t, (x,), z), dtype=DTYPE)
        values = evaluate_coefficients(problem, rows, directions, keys=[], require_positive_sigma=False)
        sigma = values.sigma.value.detach().numpy().reshape(-1)
        alpha = values.alpha.value.detach().numpy().reshape(-1)
        source = np.broadcast_to(values.source.value.detach().numpy(), (grid.cells, quad.size))
        return sigma, alpha, source

    sigma, alpha, _ = coefficients_at(grid.start_time)
    diagonal = eps * eps / grid.dt + sigma + eps * eps * alpha
    speeds = eps * np.abs(mu) / grid.dx
    solvers = [splu(_ordinate_matrix(m, s, diagonal, periodic)) for m, s in zip(mu, speeds)]

    inflow = np.zeros((grid.cells, quad.size))
    if not periodic:
        f_left, f_right = problem.boundary.face_value(0, 'lo'), problem.boundary.face_value(0, 'hi')
        inflow[0, mu > 0.0] = speeds[mu > 0.0] * f_left
        inflow[-1, mu < 0.0] = speeds[mu < 0.0] * f_right

    rows = torch.as_tensor(grid_rows(grid.start_time, (x,), z), dtype=DTYPE)
    f = problem.initial.evaluate(problem, rows, directions).detach().numpy().copy()
    rho = f @ weights

    recorded: List[np.ndarray] = []
    intensities: List[np.ndarray] = []
    wanted = {int(s) for s in steps}

    def record(step: int):
        for _ in range(int((steps == step).sum())):
            recorded.append(rho.copy())
            intensities.append(f.copy())

    record(0)
    total_sweeps = 0
    last = max(wanted) if wanted else 0
    for step in range(1, last + 1):
        t = grid.start_time + step * grid.dt
        _, _, source = coefficients_at(t)
        base = (eps * eps / grid.dt) * f + eps * eps * source + inflow
        iterate = rho
        for sweep in range(1, max_sweeps + 1):
            rhs = base + (sigma * iterate)[:, None]
            f_new = np.column_stack([solver.solve(rhs[:, k]) for k, solver in enumerate(solvers)])
            updated = f_new @ weights
            change = float(np.max(np.abs(updated - iterate)))
            iterate = updated
            if change < tolerance:
                break
        else:
            raise SolverError(
                f"Problem '{problem.id}': source iteration did not converge in {max_sweeps} sweeps "
                f"at t={t} (last change {change:.3e})"
            )
        total_sweeps += sweep
        f, rho = f_new, iterate
        if step in wanted:
            record(step)

    order = np.argsort(steps, kind='stable')
    values = np.empty((len(times), grid.cells))
    kept = np.empty((len(times), grid.cells, quad.size))
    values[order] = np.array(recorded).reshape(len(times), grid.cells)
    if intensities:
        kept[order] = np.array(intensities)
    logger.debug(f"S_N solve of '{problem.id}': {last} steps, {total_sweeps} sweeps")
    logger.info(f"Discrete-ordinates reference for '{problem.id}' on {grid.cells} cells, {quad.size} ordinates")
    return ReferenceField(
        times, values, grid, problem.id, 'sn_transport_1d',
        metadata={'ordinates': quad.size, 'z': z.tolist(), 'epsilon': eps},
        intensity=kept if return_intensity else None,
    )
