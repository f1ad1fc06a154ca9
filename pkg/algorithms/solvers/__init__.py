"""Reference solutions: implicit S_N transport, diffusion-limit finite volumes, exact fields, L2 errors."""

from algorithms.solvers.fields import Grid1D, Grid2D, ReferenceField, grid_from_dict, snap_times
from algorithms.solvers.transport import sn_transport_1d
from algorithms.solvers.diffusion import (
    assemble_operator,
    diffusion_expectation_1d,
    diffusion_fd_1d,
    diffusion_fd_2d,
)
from algorithms.solvers.manufactured import manufactured_field, manufactured_reference, manufactured_uq
from algorithms.solvers.errors import error_table, l2_relative_error, space_time_l2_relative_error

__all__ = [
    'Grid1D', 'Grid2D', 'ReferenceField', 'grid_from_dict', 'snap_times',
    'sn_transport_1d',
    'assemble_operator', 'diffusion_expectation_1d', 'diffusion_fd_1d', 'diffusion_fd_2d',
    'manufactured_field', 'manufactured_reference', 'manufactured_uq',
    'error_table', 'l2_relative_error', 'space_time_l2_relative_error',
]
