import numpy as np
import pytest

from algorithms.problems.builtins import builtin_problem
from algorithms.quadrature.angular import angular_average, circle_quadrature, gauss_legendre, quadrature_for
from algorithms.quadrature.sampling import SampleCounts, resample_interior, sample_domain
from algorithms.quadrature.sobol import sobol_points, supported_dimensions


# ANGULAR RULES

def test_gauss_legendre_small_rules():
    """n = 1 is (0, 2); n = 2 is +-1/sqrt(3) with unit weights."""
    one = gauss_legendre(1)
    assert one.nodes[:, 0].tolist() == [0.0]
    assert one.raw_weights.tolist() == pytest.approx([2.0])
    two = gauss_legendre(2)
    np.testing.assert_allclose(two.nodes[:, 0], [-1 / np.sqrt(3), 1 / np.sqrt(3)], atol=1e-15)
    np.testing.assert_allclose(two.raw_weights, [1.0, 1.0], atol=1e-15)


@pytest.mark.parametrize('n', [2, 4, 8, 16])
def test_gauss_legendre_exact_to_degree_2n_minus_1(n):
    """Monomials up to degree 2n - 1 integrate exactly."""
    quad = gauss_legendre(n)
    mu = quad.nodes[:, 0]
    for k in range(2 * n):
        exact = 2.0 / (k + 1) if k % 2 == 0 else 0.0
        assert np.sum(quad.raw_weights * mu ** k) == pytest.approx(exact, abs=1e-13)


def test_gauss_legendre_rejects_empty_rule():
    """At least one node."""
    with pytest.raises(ValueError):
        gauss_legendre(0)


def test_circle_quadrature_moments():
    """<1> = 1, <xi> = <eta> = 0 and <xi^2> = 1/2."""
    quad = circle_quadrature(8)
    xi, eta = quad.nodes[:, 0], quad.nodes[:, 1]
    assert angular_average(np.ones(8), quad) == pytest.approx(1.0, abs=1e-15)
    assert abs(angular_average(xi, quad)) <= 1e-15
    assert abs(angular_average(eta, quad)) <= 1e-15
    assert angular_average(xi ** 2, quad) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(ValueError):
        circle_quadrature(7)


def test_angular_average_one_dimension():
    """Odd moments vanish, <mu^2> = 1/3, constants pass through."""
    quad = quadrature_for(1)
    mu = quad.nodes[:, 0]
    assert abs(angular_average(mu, quad)) <= 1e-15
    assert angular_average(mu ** 2, quad) == pytest.approx(1.0 / 3.0, abs=1e-15)
    assert angular_average(np.full(16, 2.5), quad) == pytest.approx(2.5)
    assert quad.second_moment == pytest.approx(1.0 / 3.0)
    with pytest.raises(ValueError):
        angular_average(np.ones(5), quad)


def test_angular_average_batches_over_leading_axes():
    """One average per row."""
    quad = gauss_legendre(4)
    values = np.stack([np.ones(4), quad.nodes[:, 0] ** 2])
    np.testing.assert_allclose(angular_average(values, quad), [1.0, 1.0 / 3.0], atol=1e-15)


# SOBOL

def test_sobol_first_points_in_one_dimension():
    """0.5, 0.75, 0.25, 0.375 after the zero point."""
    np.testing.assert_array_equal(sobol_points(1, 4)[:, 0], [0.5, 0.75, 0.25, 0.375])


def test_sobol_skip_continues_the_sequence():
    """Points skip+1.. equal the tail of a longer draw."""
    full = sobol_points(3, 20)
    np.testing.assert_array_equal(sobol_points(3, 12, skip=8), full[8:])


def test_sobol_unit_cube_and_uniformity():
    """Coordinates lie in [0, 1) and 4096 points average 1/2 per axis."""
    points = sobol_points(2, 4096)
    assert points.min() >= 0.0 and points.max() < 1.0
    assert np.all(np.abs(points.mean(axis=0) - 0.5) <= 0.01)
    high = sobol_points(supported_dimensions(), 64)
    assert high.min() >= 0.0 and high.max() < 1.0


def test_sobol_is_deterministic():
    """Same arguments, bitwise identical points."""
    np.testing.assert_array_equal(sobol_points(5, 100, skip=7), sobol_points(5, 100, skip=7))


def test_sobol_argument_checks():
    """Dimension and count are validated."""
    with pytest.raises(ValueError):
        sobol_points(0, 4)
    with pytest.raises(ValueError):
        sobol_points(supported_dimensions() + 1, 4)
    with pytest.raises(ValueError):
        sobol_points(2, -1)


# SAMPLING

def test_empty_counts_give_empty_sets(kinetic_problem):
    """counts (0, 0, 0, 0) produce no points."""
    sets = sample_domain(kinetic_problem, SampleCounts(0, 0, 0, 0), quadrature_for(1))
    assert sets.interior.shape == (0, 2)
    assert sets.faces == []
    assert sets.initial.shape[0] == 0
    assert sets.conservation.shape[0] == 0


def test_interior_points_lie_inside(kinetic_problem):
    """0 < x < 1 and 0 < t < 4 for the kinetic example."""
    sets = sample_domain(kinetic_problem, SampleCounts(500, 10, 10), quadrature_for(1))
    t, x = sets.interior[:, 0], sets.interior[:, 1]
    assert np.all((t > 0.0) & (t < 4.0))
    assert np.all((x > 0.0) & (x < 1.0))
    assert np.all(sets.initial[:, 0] == 0.0)


def test_inflow_faces_select_entering_directions(kinetic_problem):
    """mu > 0 enters at x_L, mu < 0 at x_R."""
    quad = quadrature_for(1)
    sets = sample_domain(kinetic_problem, SampleCounts(10, 16, 10), quad)
    faces = {face.side: face for face in sets.faces}
    assert np.all(quad.nodes[faces['lo'].inflow, 0] > 0.0)
    assert np.all(quad.nodes[faces['hi'].inflow, 0] < 0.0)
    assert faces['lo'].inflow.sum() == 8
    assert np.all(faces['lo'].points[:, 1] == 0.0)
    assert np.all(faces['hi'].points[:, 1] == 1.0)
    assert len(faces['lo']) == 16


def test_two_dimensional_faces():
    """The box gets four faces with outward normals."""
    problem = builtin_problem('ex_4_2_diffusion')
    quad = quadrature_for(2)
    sets = sample_domain(problem, SampleCounts(8, 5, 5), quad)
    assert len(sets.faces) == 4
    for face in sets.faces:
        assert np.all(quad.nodes[face.inflow] @ face.normal < 0.0)
    assert sets.n_boundary == 20


def test_periodic_faces_are_matched_pairs():
    """Partner points differ only in the periodic coordinate."""
    problem = builtin_problem('ex_4_1_2_soft')
    sets = sample_domain(problem, SampleCounts(10, 12, 10), quadrature_for(1))
    (face,) = sets.faces
    assert face.periodic
    np.testing.assert_array_equal(face.points[:, 0], face.partner[:, 0])
    assert np.all(face.points[:, 1] == 0.0) and np.all(face.partner[:, 1] == 1.0)


def test_random_inputs_span_the_cube():
    """z columns lie in [-1, 1)."""
    problem = builtin_problem('uq_problem_1')
    sets = sample_domain(problem, SampleCounts(256, 4, 4), quadrature_for(1))
    z = sets.interior[:, 2:]
    assert z.shape == (256, 10)
    assert z.min() >= -1.0 and z.max() < 1.0


def test_resampling_changes_only_interior(kinetic_problem):
    """A new skip redraws interior points and keeps the other sets."""
    sets = sample_domain(kinetic_problem, SampleCounts(50, 5, 5), quadrature_for(1))
    moved = resample_interior(kinetic_problem, sets, skip=1000)
    assert moved.skip == 1000
    assert not np.array_equal(moved.interior, sets.interior)
    assert moved.initial is sets.initial


def test_sampling_rejects_wrong_quadrature(kinetic_problem):
    """A 2D rule cannot pair with a 1D problem."""
    with pytest.raises(ValueError):
        sample_domain(kinetic_problem, SampleCounts(1, 1, 1), quadrature_for(2))
    with pytest.raises(ValueError):
        SampleCounts(-1, 0, 0)
