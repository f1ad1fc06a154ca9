"""Angular quadrature, Sobol sequences and collocation sampling."""

from algorithms.quadrature.angular import (
    AngularQuadrature,
    angular_average,
    circle_quadrature,
    gauss_legendre,
    quadrature_for,
)
from algorithms.quadrature.sobol import direction_integers, sobol_points, supported_dimensions
from algorithms.quadrature.sampling import (
    FaceSamples,
    SampleCounts,
    SampleSets,
    resample_interior,
    sample_domain,
)

__all__ = [
    'AngularQuadrature', 'angular_average', 'circle_quadrature', 'gauss_legendre', 'quadrature_for',
    'direction_integers', 'sobol_points', 'supported_dimensions',
    'FaceSamples', 'SampleCounts', 'SampleSets', 'resample_interior', 'sample_domain',
]
