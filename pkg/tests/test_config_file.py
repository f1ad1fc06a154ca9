try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import pytest

from algorithms.exceptions import ConfigurationError
from algorithms.experiment_config import (
    DESK_MAX_STEPS,
    PAPER_HIDDEN_WIDTHS,
    builtin_experiment,
    dump_config,
    load_config,
    parse_config,
)
from algorithms.problems.builtins import BUILTIN_PROBLEMS


@pytest.mark.parametrize('problem_id', sorted(BUILTIN_PROBLEMS))
def test_dumped_config_parses_back(problem_id):
    """Every builtin experiment survives a trip through its TOML text."""
    config = builtin_experiment(problem_id)
    assert parse_config(tomllib.loads(dump_config(config))) == config


def test_builtin_scales():
    desk = builtin_experiment('ex_4_1_3')
    paper = builtin_experiment('ex_4_1_3', paper_scale=True)
    assert desk.spec.layer_widths == (3, 24, 24, 24, 1)
    assert paper.network.hidden_widths == PAPER_HIDDEN_WIDTHS
    assert desk.training.max_steps == DESK_MAX_STEPS
    assert (desk.loss.beta1, desk.loss.beta2, desk.loss.lambda_b) == (1e-5, 1e-16, 10.0)
    assert builtin_experiment('uq_problem_1').spec.layer_widths[0] == 13


def test_id_only_config_uses_builtin_defaults():
    config = parse_config({'problem': {'id': 'ex_4_1_5'}, 'training': {'max_steps': 10}})
    assert config.problem == builtin_experiment('ex_4_1_5').problem
    assert config.loss == builtin_experiment('ex_4_1_5').loss
    assert config.training.max_steps == 10


def test_base_override():
    """Keys listed next to `base` replace the builtin settings."""
    config = parse_config({
        'problem': {'base': 'ex_4_1_3', 'id': 'ex_4_1_3_eps3', 'epsilon': 1e-3, 'boundary': {'x_hi': 0.5}},
        'loss': {'lambda_b': 2},
    })
    assert config.problem.id == 'ex_4_1_3_eps3'
    assert config.problem.epsilon == 1e-3
    assert (config.problem.boundary.x_lo, config.problem.boundary.x_hi) == (1.0, 0.5)
    assert config.loss.lambda_b == 2.0
    assert config.loss.beta2 == 1e-16


def test_overrides_from_flags():
    config = builtin_experiment('ex_4_1_1').with_overrides(mode='pinn', seed=7, max_steps=0, deterministic=True)
    assert config.mode == 'pinn'
    assert (config.training.seed, config.training.max_steps, config.training.deterministic) == (7, 0, True)
    assert builtin_experiment('ex_4_1_1').with_overrides().mode == 'ma_apnn'


@pytest.mark.parametrize('data, message', [
    ({'problem': {'id': 'ex_4_1_1'}, 'loss': {'gamma': 1.0}}, "unknown field 'gamma'"),
    ({'problem': {'id': 'ex_4_1_1'}, 'training': {'max_steps': 'many'}}, "field 'max_steps' must be int"),
    ({'problem': {'id': 'ex_4_1_1'}, 'sampling': {'n_int': True}}, "field 'n_int' must be int"),
    ({'problem': {'id': 'ex_4_1_1'}, 'optimizer': {}}, 'Unknown section [optimizer]'),
    ({'network': {}}, 'needs a [problem] section'),
    ({'problem': {'id': 'ex_4_1_1'}, 'loss': {'mode': 'galerkin'}}, "'galerkin' is unknown"),
    ({'problem': {'id': 'ex_4_1_1'}, 'network': {'hidden_widths': [24, 'wide']}}, 'list of integers'),
    ({'problem': {'base': 'ex_4_1_1', 'sigma': {'shape': 'round'}}}, "[problem.sigma] unknown field 'shape'"),
])
def test_rejected_configs(data, message):
    with pytest.raises(ConfigurationError) as excinfo:
        parse_config(data)
    assert message in str(excinfo.value)


def test_conservation_weight_needs_points():
    with pytest.raises(ConfigurationError):
        parse_config({'problem': {'id': 'ex_4_1_1'}, 'loss': {'lambda_c': 1.0}})


def test_load_config_file(tmp_path):
    path = tmp_path / 'run.toml'
    path.write_text('[problem]\nbase = "ex_4_1_1"\nid = "slab"\n\n[training]\nmax_steps = 25\nseed = 3\n')
    config = load_config(path)
    assert config.problem.id == 'slab'
    assert (config.training.max_steps, config.training.seed) == (25, 3)


def test_toml_syntax_error_names_the_position(tmp_path):
    path = tmp_path / 'broken.toml'
    path.write_text('[problem\nid = "ex_4_1_1"\n')
    with pytest.raises(ConfigurationError) as excinfo:
        load_config(path)
    assert 'line 1' in str(excinfo.value)
    assert 'column' in str(excinfo.value)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / 'absent.toml')
