"""
Exact solution of the manufactured random-input problem

    f = t x (1 - x)(mu + 11 + sum z) / 22
    rho = <f> = t x (1 - x)(11 + sum z) / 22
    E[rho] = t x (1 - x) / 2

with the source of kind 'uq_manufactured' and zero initial and inflow data.
"""

from typing import Optional, Sequence, Tuple

import numpy as np

from algorithms.exceptions import ConfigurationError
from algorithms.problems.fields import AnalyticField
from algorithms.solvers.fields import Grid1D, ReferenceField, snap_times


def _check(problem):
    if problem.dimension != 1 or problem.source.kind != 'uq_manufactured':
        raise ConfigurationError(f"Problem '{problem.id}' is not the manufactured random-input problem")


def manufactured_uq(problem, t, x, mu, z) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    (f, rho, E[rho]) at broadcast arrays t, x, mu; z has its uq_dim entries on the last axis.
    """
    _check(problem)
    t, x, mu = (np.asarray(v, dtype=np.float64) for v in (t, x, mu))
    z_sum = np.asarray(z, dtype=np.float64).sum(axis=-1)
    bump = t * x * (1.0 - x)
    f = bump * (mu + 11.0 + z_sum) / 22.0
    rho = bump * (11.0 + z_sum) / 22.0
    expectation = 0.5 * bump
    return f, rho, expectation


def manufactured_field(problem) -> AnalyticField:
    """The exact f as a jet expression, for residual and loss checks."""
    _check(problem)
    return AnalyticField(
        problem,
        lambda v: v.t * v.x * (1.0 - v.x) * ((v.mu + 11.0 + v.z_sum) / 22.0),
        name='manufactured_uq',
    )


def manufactured_reference(problem, grid: Optional[Grid1D] = None,
                           snapshots: Optional[Sequence[float]] = None) -> ReferenceField:
    """E[rho] tabulated on a grid at the snapshot times."""
    _check(problem)
    grid = grid or Grid1D.for_problem(problem)
    _, times = snap_times(grid, problem.snapshots if snapshots is None else snapshots)
    (x,) = grid.centers()
    values = np.array([0.5 * t * x * (1.0 - x) for t in times]).reshape(len(times), grid.cells)
    return ReferenceField(times, values, grid, problem.id, 'manufactured_uq', metadata={'quantity': 'expectation'})
