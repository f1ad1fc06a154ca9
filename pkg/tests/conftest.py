"""Shared fixtures: Django settings for the command tests, small problem instances."""

import os

import django
import pytest

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'maapnn_project.settings')
django.setup()

from algorithms.network.mlp import NetworkSpec, init_network  # noqa: E402
from algorithms.problems.builtins import builtin_problem  # noqa: E402


@pytest.fixture
def kinetic_problem():
    return builtin_problem('ex_4_1_1')


@pytest.fixture
def diffusive_problem():
    return builtin_problem('ex_4_1_3')


@pytest.fixture
def small_network():
    def build(problem, hidden=(6, 6), seed=3):
        spec = NetworkSpec((problem.network_input_width,) + tuple(hidden) + (1,))
        return spec, init_network(spec, seed)
    return build
