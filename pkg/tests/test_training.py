import math

import numpy as np
import pytest
import torch

from algorithms.exceptions import ConfigurationError, NonFiniteLossError
from algorithms.losses.weights import LossHyper
from algorithms.network.checkpoint import load_checkpoint
from algorithms.network.mlp import NetworkSpec, ParameterVector, init_network
from algorithms.quadrature.angular import quadrature_for
from algorithms.quadrature.sampling import SampleCounts, sample_domain
from algorithms.training import TrainConfig, TrainState, adam_step, minimize, train


@pytest.fixture
def tiny_spec():
    return NetworkSpec((2, 3, 1))


def test_first_adam_step_moves_by_the_learning_rate(tiny_spec):
    """Bias correction makes the first update lr * g / (|g| + eps)."""
    params = ParameterVector.zeros(tiny_spec)
    state = TrainState.initial(params)
    gradient = torch.linspace(-2.0, 2.0, len(params), dtype=torch.float64)
    config = TrainConfig(learning_rate=0.01)
    updated = adam_step(state, gradient, config)
    expected = -0.01 * gradient / (gradient.abs() + 1e-8)
    torch.testing.assert_close(updated.params.flat, expected)
    assert updated.step == 1
    assert state.step == 0
    assert torch.count_nonzero(state.params.flat) == 0


def test_adam_step_rejects_bad_gradients(tiny_spec):
    state = TrainState.initial(ParameterVector.zeros(tiny_spec))
    bad = torch.zeros(len(state.params), dtype=torch.float64)
    bad[3] = float('nan')
    with pytest.raises(NonFiniteLossError):
        adam_step(state, bad, TrainConfig())
    with pytest.raises(ValueError):
        adam_step(state, torch.zeros(2, dtype=torch.float64), TrainConfig())


@pytest.mark.parametrize('changes', [
    {'max_steps': -1},
    {'learning_rate': 0.0},
    {'beta1': 1.0},
    {'beta2': 0.0},
    {'log_every': 0},
    {'resample_every': 0},
    {'lr_decay_rate': 1.5},
    {'seed': -3},
])
def test_train_config_validation(changes):
    with pytest.raises(ConfigurationError):
        TrainConfig(**changes)


def test_learning_rate_decay():
    """Step decay by lr_decay_rate every lr_decay_every updates."""
    config = TrainConfig(learning_rate=1e-3, lr_decay_rate=0.5, lr_decay_every=100)
    assert config.learning_rate_at(0) == 1e-3
    assert config.learning_rate_at(99) == 1e-3
    assert config.learning_rate_at(100) == 5e-4
    assert config.learning_rate_at(250) == 2.5e-4
    assert TrainConfig().learning_rate_at(10 ** 6) == 1e-3


def test_minimize_a_quadratic(tiny_spec):
    """Adam drives a convex quadratic to its minimizer."""
    target = torch.linspace(-1.0, 1.0, tiny_spec.n_params, dtype=torch.float64)

    def objective(params):
        return ((params.flat - target) ** 2).sum()

    outcome = minimize(objective, ParameterVector.zeros(tiny_spec),
                       TrainConfig(max_steps=2000, learning_rate=0.05, log_every=500,
                                   lr_decay_rate=0.5, lr_decay_every=250))
    assert outcome.final_loss < 5e-4
    assert outcome.loss_ratio < 1e-4
    assert len(outcome.telemetry) == 4
    assert list(outcome.telemetry.columns) == ['step', 'total', 'seconds']
    torch.testing.assert_close(outcome.best_params.flat, target, atol=2e-2, rtol=0.0)


@pytest.fixture
def kinetic_run(kinetic_problem):
    quad = quadrature_for(1, 8)
    spec = NetworkSpec((3, 6, 1))
    samples = sample_domain(kinetic_problem, SampleCounts(16, 4, 8), quad)
    return kinetic_problem, spec, samples, quad


def test_telemetry_rows(kinetic_run):
    """One row every log_every steps, with every loss part."""
    problem, spec, samples, quad = kinetic_run
    config = TrainConfig(max_steps=5, log_every=2, learning_rate=1e-3)
    outcome = train(problem, spec, init_network(spec, 1), LossHyper(), samples, config, quad)
    assert len(outcome.telemetry) == math.ceil(5 / 2)
    assert outcome.telemetry['step'].tolist() == [0, 2, 4]
    assert {'governing', 'macro_aux', 'boundary', 'initial', 'lambda_max'} <= set(outcome.telemetry.columns)
    assert outcome.state.step == 5
    assert outcome.state.best_loss <= outcome.initial_loss
    assert np.isfinite(outcome.final_loss)


def test_zero_steps_evaluates_once(kinetic_run):
    problem, spec, samples, quad = kinetic_run
    params = init_network(spec, 1)
    outcome = train(problem, spec, params, LossHyper(), samples, TrainConfig(max_steps=0), quad)
    assert outcome.initial_loss == outcome.final_loss
    assert outcome.telemetry.empty
    torch.testing.assert_close(outcome.best_params.flat, params.flat)


def test_resumed_run_matches_uninterrupted_run(kinetic_run, tmp_path):
    """Checkpoint after 3 steps and resume: the same parameters as 6 straight steps."""
    problem, spec, samples, quad = kinetic_run
    params = init_network(spec, 2)
    config = TrainConfig(max_steps=6, learning_rate=1e-2, resample_every=2, seed=11)
    straight = train(problem, spec, params, LossHyper(), samples, config, quad)

    path = tmp_path / 'checkpoint.pt'
    train(problem, spec, params, LossHyper(), samples, config.with_changes(max_steps=3), quad,
          checkpoint_path=path)
    checkpoint = load_checkpoint(path, expected_spec=spec)
    assert checkpoint.step == 3
    resumed = train(problem, spec, params, LossHyper(), samples, config, quad,
                    state=TrainState.from_checkpoint(checkpoint))
    assert resumed.state.step == 6
    assert resumed.state.sample_skip == straight.state.sample_skip
    torch.testing.assert_close(resumed.state.params.flat, straight.state.params.flat)
    assert resumed.final_loss == pytest.approx(straight.final_loss, rel=1e-12)


def test_training_stops_on_non_finite_loss(kinetic_run):
    """Infinite parameters give a non-finite loss at the first step."""
    problem, spec, samples, quad = kinetic_run
    params = init_network(spec, 1).with_flat(torch.full((spec.n_params,), float('inf'), dtype=torch.float64))
    with pytest.raises(NonFiniteLossError):
        train(problem, spec, params, LossHyper(), samples, TrainConfig(max_steps=3), quad)
