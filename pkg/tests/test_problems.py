import numpy as np
import pytest
import torch

from algorithms.exceptions import CoefficientError, ConfigurationError
from algorithms.network.mlp import NetworkSpec, init_network
from algorithms.problems.builtins import builtin_ids, builtin_problem
from algorithms.problems.coefficients import CoefficientField, evaluate_coefficients
from algorithms.problems.config import ProblemConfig
from algorithms.problems.fields import constrained_network
from algorithms.quadrature.angular import quadrature_for


def test_diffusive_example_settings(diffusive_problem):
    """ex_4_1_3: unit interval, tau = (0, 2), f_L = 1, f_R = 0, eps = 1e-8."""
    p = diffusive_problem
    assert p.domain == ((0.0, 1.0),)
    assert p.time_interval == (0.0, 2.0)
    assert p.boundary.face_value(0, 'lo') == 1.0
    assert p.boundary.face_value(0, 'hi') == 0.0
    assert p.initial.value == 0.0
    assert p.epsilon == 1e-8
    assert p.snapshots == (0.01, 0.05, 0.15, 2.0)


def test_unknown_example_lists_valid_ids():
    """The error names the known examples."""
    with pytest.raises(ConfigurationError, match='ex_4_1_1'):
        builtin_problem('ex_9_9_9')


def test_every_builtin_survives_dict_round_trip():
    """from_dict(to_dict(p)) == p."""
    for problem_id in builtin_ids():
        problem = builtin_problem(problem_id)
        assert ProblemConfig.from_dict(problem.to_dict()) == problem


def test_problem_validation():
    """Bad epsilon, domains and random coefficients without z are refused."""
    base = builtin_problem('ex_4_1_1')
    with pytest.raises(ConfigurationError):
        base.with_changes(epsilon=0.0)
    with pytest.raises(ConfigurationError):
        base.with_changes(domain=((1.0, 0.0),))
    with pytest.raises(ConfigurationError):
        base.with_changes(sigma=CoefficientField.of_kind('cosine_random'))
    with pytest.raises(ConfigurationError):
        base.with_changes(hard_constraint='box2d_relu_product')
    with pytest.raises(ConfigurationError):
        base.with_changes(snapshots=(5.0,))


def test_polynomial_sigma_and_its_inverse_derivative():
    """sigma(0.1) = 2 and d(1/sigma)/dx = -5 there; the slope vanishes at x = 0."""
    problem = builtin_problem('ex_4_1_4')
    values = evaluate_coefficients(problem, [[0.5, 0.1], [0.5, 0.0]])
    assert values.sigma.value[0, 0].item() == pytest.approx(2.0)
    assert values.inverse_sigma[(0, 1)][0, 0].item() == pytest.approx(-5.0)
    assert values.inverse_sigma[(0, 1)][1, 0].item() == pytest.approx(0.0)


def test_constant_sigma_has_flat_inverse(kinetic_problem):
    """Every derivative of 1/sigma vanishes for constant sigma."""
    values = evaluate_coefficients(kinetic_problem, [[0.3, 0.4]])
    for key in values.inverse_sigma.keys():
        if key.order > 0:
            assert values.inverse_sigma[key].abs().max().item() == 0.0


def test_random_sigma_at_zero_input():
    """uq_problem_1: sigma(z = 0) = 1 + 0.1 * 10 = 2."""
    problem = builtin_problem('uq_problem_1')
    values = evaluate_coefficients(problem, np.zeros((1, problem.point_width)))
    assert values.sigma.value.item() == pytest.approx(2.0)
    assert values.source is None


def test_nonpositive_sigma_is_rejected(kinetic_problem):
    """sigma = 0 raises unless explicitly admitted."""
    void = kinetic_problem.with_changes(sigma=CoefficientField.constant(0.0))
    with pytest.raises(CoefficientError):
        evaluate_coefficients(void, [[0.1, 0.5]])
    values = evaluate_coefficients(void, [[0.1, 0.5]], require_positive_sigma=False)
    assert values.inverse_sigma is None


def test_nu_combines_scattering_and_absorption():
    """nu = sigma / eps^2 + alpha."""
    problem = builtin_problem('ex_4_1_1').with_changes(
        epsilon=0.5, sigma=CoefficientField.constant(2.0), alpha=CoefficientField.constant(1.0))
    values = evaluate_coefficients(problem, [[0.0, 0.5]])
    assert values.nu(problem.epsilon).item() == pytest.approx(9.0)


# HARD CONSTRAINTS

def _network(problem, seed):
    spec = NetworkSpec((problem.network_input_width, 6, 6, 1))
    return spec, init_network(spec, seed)


@pytest.mark.parametrize('seed', range(5))
def test_uq_constraint_vanishes_on_initial_and_boundary(seed):
    """(t - t0)(x - x_L)(x_R - x) f~ is zero at t = 0, x = 0 and x = 1."""
    problem = builtin_problem('uq_problem_1')
    spec, params = _network(problem, seed)
    field = constrained_network(problem, params, spec)
    rng = np.random.default_rng(seed)
    points = rng.uniform(-1.0, 1.0, size=(30, problem.point_width))
    points[:10, 0] = 0.0
    points[10:20, 0], points[10:20, 1] = rng.uniform(0, 1, 10), 0.0
    points[20:, 0], points[20:, 1] = rng.uniform(0, 1, 10), 1.0
    values = field.values(points, quadrature_for(1).nodes_tensor())
    assert values.shape == (30, 16)
    assert torch.count_nonzero(values) == 0


@pytest.mark.parametrize('seed', range(5))
def test_box_constraint_vanishes_for_inflow_directions(seed):
    """At x = 0 with xi > 0 and at y = 1 with eta < 0 the field is exactly 0."""
    problem = builtin_problem('ex_4_2_kinetic')
    spec, params = _network(problem, seed)
    field = constrained_network(problem, params, spec)
    quad = quadrature_for(2)
    rng = np.random.default_rng(seed)
    points = rng.uniform(0.0, 1.0, size=(20, 3))
    points[:10, 1] = 0.0
    points[10:, 2] = 1.0
    values = field.values(points, quad.nodes_tensor())
    entering_left = torch.from_numpy(quad.nodes[:, 0] > 0.0)
    entering_top = torch.from_numpy(quad.nodes[:, 1] < 0.0)
    assert torch.count_nonzero(values[:10][:, entering_left]) == 0
    assert torch.count_nonzero(values[10:][:, entering_top]) == 0
    assert torch.count_nonzero(values[:10][:, ~entering_left]) > 0


@pytest.mark.parametrize('seed', range(5))
def test_periodic_lift_is_exactly_periodic(seed):
    """f(t, 0, mu) == f(t, 1, mu) bit for bit."""
    problem = builtin_problem('ex_4_1_2')
    spec, params = _network(problem, seed)
    field = constrained_network(problem, params, spec)
    t = np.random.default_rng(seed).uniform(0.0, 1.0, 25)
    left = np.column_stack([t, np.zeros(25)])
    right = np.column_stack([t, np.ones(25)])
    directions = quadrature_for(1).nodes_tensor()
    assert torch.equal(field.values(left, directions), field.values(right, directions))


def test_network_width_must_fit_problem():
    """A network with the wrong input width is refused."""
    problem = builtin_problem('ex_4_1_2')
    spec = NetworkSpec((3, 4, 1))
    with pytest.raises(ConfigurationError):
        constrained_network(problem, init_network(spec, 0), spec)
