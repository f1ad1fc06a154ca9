"""Transfer problem instances, coefficient fields and hard-constrained network fields."""

from algorithms.problems.coefficients import (
    COEFFICIENT_KINDS,
    CoefficientField,
    CoefficientValues,
    PointVariables,
    evaluate_coefficients,
    point_variables,
    register_expression,
)
from algorithms.problems.config import (
    HARD_CONSTRAINTS,
    BoundaryCondition,
    InitialData,
    ProblemConfig,
)
from algorithms.problems.builtins import BUILTIN_PROBLEMS, builtin_ids, builtin_problem
from algorithms.problems.fields import (
    AnalyticField,
    HardConstraintWrapper,
    NetworkField,
    TransportField,
    constrained_network,
)

__all__ = [
    'COEFFICIENT_KINDS', 'CoefficientField', 'CoefficientValues', 'PointVariables',
    'evaluate_coefficients', 'point_variables', 'register_expression',
    'HARD_CONSTRAINTS', 'BoundaryCondition', 'InitialData', 'ProblemConfig',
    'BUILTIN_PROBLEMS', 'builtin_ids', 'builtin_problem',
    'AnalyticField', 'HardConstraintWrapper', 'NetworkField', 'TransportField', 'constrained_network',
]
