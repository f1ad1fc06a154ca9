"""
Builtin transfer problems

The physical settings of every reproduction example: 1D kinetic, initial
layer, diffusive and intermediate regimes, the 2D box in kinetic and
diffusive regimes, and the two random-input problems. Training
hyperparameters for the same ids live in algorithms.experiment_config.
"""

from typing import Callable, Dict, List

from algorithms.exceptions import ConfigurationError
from algorithms.problems.coefficients import CoefficientField
from algorithms.problems.config import BoundaryCondition, InitialData, ProblemConfig

UNIT = ((0.0, 1.0),)
UNIT_SQUARE = ((0.0, 1.0), (0.0, 1.0))


def _ex_4_1_1() -> ProblemConfig:
    return ProblemConfig(
        id='ex_4_1_1', dimension=1, epsilon=1.0, domain=UNIT, time_interval=(0.0, 4.0),
        boundary=BoundaryCondition('inflow', x_lo=0.0, x_hi=1.0),
        snapshots=(0.15, 0.4, 1.0, 1.6, 4.0),
    )


def _ex_4_1_2() -> ProblemConfig:
    return ProblemConfig(
        id='ex_4_1_2', dimension=1, epsilon=1.0, domain=UNIT, time_interval=(0.0, 1.0),
        boundary=BoundaryCondition('periodic'),
        initial=InitialData('cosine_maxwellian'),
        hard_constraint='periodic_lift',
        snapshots=(0.0, 0.1),
    )


def _ex_4_1_2_soft() -> ProblemConfig:
    return _ex_4_1_2().with_changes(id='ex_4_1_2_soft', hard_constraint='none')


def _ex_4_1_3() -> ProblemConfig:
    return ProblemConfig(
        id='ex_4_1_3', dimension=1, epsilon=1e-8, domain=UNIT, time_interval=(0.0, 2.0),
        boundary=BoundaryCondition('inflow', x_lo=1.0, x_hi=0.0),
        snapshots=(0.01, 0.05, 0.15, 2.0),
    )


def _ex_4_1_4() -> ProblemConfig:
    return _ex_4_1_3().with_changes(
        id='ex_4_1_4', epsilon=1e-4,
        sigma=CoefficientField.of_kind('polynomial_1p10x_sq'),
        snapshots=(0.2, 0.4, 0.6, 0.8, 1.0),
    )


def _ex_4_1_5() -> ProblemConfig:
    return _ex_4_1_4().with_changes(
        id='ex_4_1_5', epsilon=1e-2,
        source=CoefficientField.constant(1.0),
        output_activation='identity',
        snapshots=(0.2, 0.4),
    )


def _ex_4_2_kinetic() -> ProblemConfig:
    return ProblemConfig(
        id='ex_4_2_kinetic', dimension=2, epsilon=1.0, domain=UNIT_SQUARE, time_interval=(0.0, 1.0),
        source=CoefficientField.constant(1.0),
        boundary=BoundaryCondition('inflow'),
        hard_constraint='box2d_relu_product',
        snapshots=(0.4, 1.0),
    )


def _ex_4_2_diffusion() -> ProblemConfig:
    return _ex_4_2_kinetic().with_changes(id='ex_4_2_diffusion', epsilon=1e-8, snapshots=(0.1, 0.8))


def _uq_problem_1() -> ProblemConfig:
    return ProblemConfig(
        id='uq_problem_1', dimension=1, epsilon=1.0, domain=UNIT, time_interval=(0.0, 1.0),
        sigma=CoefficientField.of_kind('cosine_random'),
        source=CoefficientField.of_kind('uq_manufactured'),
        boundary=BoundaryCondition('inflow'),
        uq_dim=10,
        hard_constraint='uq_txx',
        snapshots=(0.2, 0.4, 0.6),
    )


def _uq_problem_2() -> ProblemConfig:
    return ProblemConfig(
        id='uq_problem_2', dimension=1, epsilon=1e-5, domain=UNIT, time_interval=(0.0, 1.0),
        sigma=CoefficientField.of_kind('sine_product_random'),
        boundary=BoundaryCondition('inflow', x_lo=1.0, x_hi=0.0),
        uq_dim=20,
        snapshots=(0.05, 0.1),
    )


BUILTIN_PROBLEMS: Dict[str, Callable[[], ProblemConfig]] = {
    'ex_4_1_1': _ex_4_1_1,
    'ex_4_1_2': _ex_4_1_2,
    'ex_4_1_2_soft': _ex_4_1_2_soft,
    'ex_4_1_3': _ex_4_1_3,
    'ex_4_1_4': _ex_4_1_4,
    'ex_4_1_5': _ex_4_1_5,
    'ex_4_2_kinetic': _ex_4_2_kinetic,
    'ex_4_2_diffusion': _ex_4_2_diffusion,
    'uq_problem_1': _uq_problem_1,
    'uq_problem_2': _uq_problem_2,
}


def builtin_ids() -> List[str]:
    return list(BUILTIN_PROBLEMS)


def builtin_problem(problem_id: str) -> ProblemConfig:
    """The physical settings of a builtin example."""
    try:
        factory = BUILTIN_PROBLEMS[problem_id]
    except KeyError:
        raise ConfigurationError(
            f"Unknown example '{problem_id}'. Valid ids: {', '.join(BUILTIN_PROBLEMS)}"
        ) from None
    return factory()
