import numpy as np
import pytest

from algorithms.exceptions import ConfigurationError, MissingReferenceError, SolverError
from algorithms.problems.builtins import builtin_problem
from algorithms.problems.coefficients import CoefficientField, register_expression
from algorithms.problems.config import BoundaryCondition, InitialData
from algorithms.quadrature.angular import gauss_legendre
from algorithms.solvers.diffusion import diffusion_expectation_1d, diffusion_fd_1d, diffusion_fd_2d
from algorithms.solvers.errors import error_table, l2_relative_error, space_time_l2_relative_error
from algorithms.solvers.fields import Grid1D, Grid2D, ReferenceField, metadata_path, snap_times
from algorithms.solvers.manufactured import manufactured_reference, manufactured_uq
from algorithms.solvers.transport import sn_transport_1d


@register_expression('quartic_bump_steady_source')
def _quartic_bump_steady_source(v):
    # rho = 1 - x + x^2 (1 - x)^2 is steady for d_t rho = rho''/3 + G
    return (2.0 - 12.0 * v.x + 12.0 * v.x * v.x) * (-1.0 / 3.0)


def _quartic_bump(x):
    return 1.0 - x + x ** 2 * (1.0 - x) ** 2


def _long_run(problem, final_time):
    return problem.with_changes(time_interval=(0.0, final_time), snapshots=(final_time,))


# DIFFUSION LIMIT

def test_linear_steady_state(diffusive_problem):
    """rho(0) = 1, rho(1) = 0, sigma = 1: rho -> 1 - x."""
    problem = _long_run(diffusive_problem, 5.0)
    grid = Grid1D(200, 0.0, 1.0, 0.01, 5.0)
    ref = diffusion_fd_1d(problem, grid)
    (x,) = grid.centers()
    assert ref.scheme == 'diffusion_fd_1d'
    assert np.max(np.abs(ref.snapshot(5.0) - (1.0 - x))) <= 1e-3


def test_second_order_in_space(diffusive_problem):
    """Halving dx divides the steady-state error by about four."""
    problem = _long_run(diffusive_problem, 8.0).with_changes(
        id='quartic_bump', source=CoefficientField.of_kind('expression', name='quartic_bump_steady_source'))
    errors = []
    for cells in (50, 100):
        grid = Grid1D(cells, 0.0, 1.0, 0.02, 8.0)
        ref = diffusion_fd_1d(problem, grid)
        (x,) = grid.centers()
        errors.append(np.max(np.abs(ref.snapshot(8.0) - _quartic_bump(x))))
    assert 3.5 <= errors[0] / errors[1] <= 4.5


def test_periodic_diffusion_conserves_mass():
    """No source, no absorption, periodic closure: the integral of rho is constant."""
    problem = builtin_problem('ex_4_1_2')
    grid = Grid1D.for_problem(problem, cells=100, steps=100)
    ref = diffusion_fd_1d(problem, grid)
    masses = ref.values.sum(axis=1) * grid.dx
    assert masses[0] > 0.0
    assert np.max(np.abs(masses - masses[0])) <= 1e-10


def test_2d_poisson_steady_state():
    """G = 1, zero boundary: the center tends to the solution of -(1/2) lap rho = 1."""
    problem = _long_run(builtin_problem('ex_4_2_diffusion'), 3.0)
    grid = Grid2D((65, 65), problem.domain, 0.01, 3.0)
    ref = diffusion_fd_2d(problem, grid)
    rho = ref.snapshot(3.0)
    assert rho.shape == (65, 65)
    assert rho[32, 32] == pytest.approx(0.14734, rel=5e-3)


def test_2d_symmetry_and_maximum_principle():
    """Symmetric data stay symmetric under x <-> y; rho stays between 0 and the steady state."""
    problem = builtin_problem('ex_4_2_diffusion')
    ref = diffusion_fd_2d(problem, Grid2D.for_problem(problem, cells=24, steps=80))
    for rho in ref.values:
        assert np.max(np.abs(rho - rho.T)) <= 1e-12
        assert rho.min() >= 0.0
        assert rho.max() <= 0.15
    assert ref.values[1].max() > ref.values[0].max()


def test_diffusion_solvers_check_dimension(diffusive_problem):
    with pytest.raises(SolverError):
        diffusion_fd_2d(diffusive_problem)
    with pytest.raises(SolverError):
        diffusion_fd_1d(builtin_problem('ex_4_2_diffusion'))


def test_expectation_reference():
    """E[rho] records its draws and a standard error."""
    problem = builtin_problem('uq_problem_2')
    ref = diffusion_expectation_1d(problem, Grid1D.for_problem(problem, cells=20, steps=20), draws=4, seed=3)
    assert ref.values.shape == (2, 20)
    assert ref.metadata['draws'] == 4
    assert ref.metadata['max_standard_error'] >= 0.0
    with pytest.raises(SolverError):
        diffusion_expectation_1d(builtin_problem('ex_4_1_3'))
    with pytest.raises(ValueError):
        diffusion_expectation_1d(problem, draws=1)


# DISCRETE ORDINATES

def test_sn_keeps_isotropic_equilibrium():
    """f0 = c with periodic closure and sigma = 1 stays c."""
    problem = builtin_problem('ex_4_1_2_soft').with_changes(initial=InitialData('constant', 0.7))
    ref = sn_transport_1d(problem, Grid1D.for_problem(problem, cells=50, steps=20), gauss_legendre(8))
    assert np.max(np.abs(ref.values - 0.7)) <= 1e-10


def test_sn_keeps_matching_inflow_state(kinetic_problem):
    """Inflow 1 on both faces with f0 = 1 is a fixed point."""
    problem = kinetic_problem.with_changes(
        boundary=BoundaryCondition('inflow', x_lo=1.0, x_hi=1.0), initial=InitialData('constant', 1.0))
    ref = sn_transport_1d(problem, Grid1D.for_problem(problem, cells=40, steps=40), gauss_legendre(8),
                          return_intensity=True)
    assert np.max(np.abs(ref.values - 1.0)) <= 1e-10
    assert ref.intensity.shape == (len(problem.snapshots), 40, 8)


def test_sn_inflow_fills_the_slab(kinetic_problem):
    """With inflow 1 on the left only, rho rises from 0 and decreases across the slab."""
    ref = sn_transport_1d(kinetic_problem, Grid1D.for_problem(kinetic_problem, cells=50, steps=200))
    first, last = ref.values[0], ref.values[-1]
    assert ref.times.tolist() == pytest.approx(list(kinetic_problem.snapshots), abs=0.02)
    assert last.mean() > first.mean() > 0.0
    assert np.all(np.diff(last) < 0.0)
    assert 0.0 <= last.min() and last.max() <= 1.0


def test_sn_relaxes_toward_isotropy_as_sigma_grows(kinetic_problem):
    """eps = 1: max |f - rho| at the final time shrinks as sigma increases."""
    anisotropy = []
    for sigma in (1.0, 4.0, 16.0):
        problem = kinetic_problem.with_changes(sigma=CoefficientField.constant(sigma))
        ref = sn_transport_1d(problem, Grid1D.for_problem(problem, cells=50, steps=200), gauss_legendre(16),
                              snapshots=(4.0,), return_intensity=True)
        anisotropy.append(np.max(np.abs(ref.intensity[-1] - ref.values[-1][:, None])))
    assert anisotropy[0] > anisotropy[1] > anisotropy[2] > 0.0


def test_sn_refuses_the_diffusive_regime(diffusive_problem):
    with pytest.raises(SolverError):
        sn_transport_1d(diffusive_problem)
    with pytest.raises(SolverError):
        sn_transport_1d(builtin_problem('ex_4_2_kinetic'))


# MANUFACTURED SOLUTION

def test_manufactured_values():
    """t = 1, x = 1/2, mu = 0, z = 0: f = rho = E[rho] = 1/8."""
    problem = builtin_problem('uq_problem_1')
    f, rho, expectation = manufactured_uq(problem, 1.0, 0.5, 0.0, np.zeros(10))
    assert (float(f), float(rho), float(expectation)) == pytest.approx((0.125, 0.125, 0.125))
    f, _, _ = manufactured_uq(problem, 1.0, 0.5, 1.0, np.ones(10))
    assert float(f) == pytest.approx(0.25)


def test_manufactured_reference_is_half_bump():
    problem = builtin_problem('uq_problem_1')
    ref = manufactured_reference(problem, Grid1D.for_problem(problem, cells=10, steps=10))
    (x,) = ref.grid.centers()
    np.testing.assert_allclose(ref.snapshot(0.4), 0.2 * x * (1.0 - x))
    with pytest.raises(ConfigurationError):
        manufactured_reference(builtin_problem('ex_4_1_1'))


# ERRORS AND FILES

@pytest.fixture
def bump_reference():
    grid = Grid1D(20, 0.0, 1.0, 0.1, 1.0)
    (x,) = grid.centers()
    values = np.array([np.sin(np.pi * x), 2.0 * np.sin(np.pi * x)])
    return ReferenceField([0.5, 1.0], values, grid, 'bump', 'manual', metadata={'note': 'test'})


def test_relative_error_examples(bump_reference):
    exact = bump_reference.snapshot(0.5)
    assert l2_relative_error(exact, bump_reference, 0.5) == 0.0
    assert l2_relative_error(1.1 * exact, bump_reference, 0.5) == pytest.approx(0.1, abs=1e-14)
    assert l2_relative_error(np.zeros(20), bump_reference, 1.0) == pytest.approx(1.0)


def test_relative_error_failures(bump_reference):
    with pytest.raises(MissingReferenceError):
        l2_relative_error(np.zeros(20), bump_reference, 0.7)
    with pytest.raises(ValueError):
        l2_relative_error(np.zeros(19), bump_reference, 0.5)
    vanishing = ReferenceField([0.5], np.zeros((1, 20)), bump_reference.grid, 'zero', 'manual')
    with pytest.raises(ValueError):
        l2_relative_error(np.ones(20), vanishing, 0.5)


def test_error_table(bump_reference):
    """Per-snapshot keys plus the pooled space-time error."""
    preds = {t: 1.1 * bump_reference.snapshot(t) for t in bump_reference.times}
    table = error_table(preds, bump_reference)
    assert set(table) == {'0.5', '1', 'space_time'}
    assert table['space_time'] == pytest.approx(0.1)
    assert space_time_l2_relative_error(preds, bump_reference) == pytest.approx(0.1)


def test_reference_save_and_load(bump_reference, tmp_path):
    path = bump_reference.save(tmp_path / 'reference.csv')
    assert metadata_path(path).exists()
    loaded = ReferenceField.load(path)
    np.testing.assert_array_equal(loaded.values, bump_reference.values)
    np.testing.assert_array_equal(loaded.times, bump_reference.times)
    assert loaded.grid == bump_reference.grid
    assert (loaded.problem_id, loaded.scheme, loaded.metadata) == ('bump', 'manual', {'note': 'test'})


def test_reference_load_failures(bump_reference, tmp_path):
    with pytest.raises(MissingReferenceError):
        ReferenceField.load(tmp_path / 'absent.csv')
    path = bump_reference.save(tmp_path / 'reference.csv')
    metadata_path(path).unlink()
    with pytest.raises(MissingReferenceError):
        ReferenceField.load(path)


def test_reference_rejects_bad_values(bump_reference):
    with pytest.raises(ValueError):
        ReferenceField([0.5], np.full((1, 20), np.nan), bump_reference.grid, 'nan', 'manual')
    with pytest.raises(ValueError):
        ReferenceField([0.5], np.zeros((1, 21)), bump_reference.grid, 'short', 'manual')


def test_snap_times_to_grid():
    grid = Grid1D(10, 0.0, 1.0, 0.1, 1.0)
    steps, times = snap_times(grid, [0.0, 0.25, 1.0, 3.0])
    assert steps.tolist() == [0, 2, 10, 10]
    np.testing.assert_allclose(times, [0.0, 0.2, 1.0, 1.0])
