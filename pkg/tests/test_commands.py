"""Management commands and the experiment engine, run into pytest's tmp_path."""

from io import StringIO

import numpy as np
import pandas as pd
import pytest
from django.core.management import call_command
from django.core.management.base import CommandError

from algorithms.exceptions import ConfigurationError, MissingReferenceError, NonFiniteLossError, SolverError
from algorithms.experiment_config import builtin_experiment
from algorithms.problems.fields import AnalyticField
from algorithms.solvers.fields import Grid1D, ReferenceField
from algorithms.solvers.manufactured import manufactured_field, manufactured_reference
from experiments.engine import ExperimentResult, evaluate_field, exit_code_for, reference_for
from experiments.utils import plot_comparison, read_errors

SMALL_RUN = """\
[problem]
base = "ex_4_1_3"

[network]
hidden_widths = [4]

[sampling]
n_int = 16
n_sb = 4
n_tb = 8
n_angles = 4

[training]
max_steps = 2
log_every = 1
"""


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / 'small.toml'
    path.write_text(SMALL_RUN)
    return path


def _field_csv(path, times, x, rho, y=None):
    columns = {'t': np.repeat(times, len(x)), 'x': np.tile(x, len(times))}
    if y is not None:
        columns['y'] = np.tile(y, len(times))
    columns['rho'] = np.tile(rho, len(times))
    pd.DataFrame(columns).to_csv(path, index=False)
    return path


def test_exit_codes():
    assert exit_code_for(ConfigurationError('x')) == 2
    assert exit_code_for(NonFiniteLossError('x', step=4)) == 3
    assert exit_code_for(MissingReferenceError('x')) == 4
    assert exit_code_for(SolverError('x')) == 1
    assert exit_code_for(KeyError('x')) == 1


# REFERENCES

def test_reference_by_regime():
    """Each builtin goes to the solver for its regime."""
    assert reference_for(builtin_experiment('ex_4_1_3').problem, cells=10, steps=20).scheme == 'diffusion_fd_1d'
    assert reference_for(builtin_experiment('ex_4_1_1').problem, cells=10, steps=20).scheme == 'sn_transport_1d'
    assert reference_for(builtin_experiment('uq_problem_1').problem, cells=10, steps=10).scheme == 'manufactured_uq'
    assert reference_for(builtin_experiment('ex_4_2_diffusion').problem, cells=8, steps=8).scheme == 'diffusion_fd_2d'
    with pytest.raises(MissingReferenceError):
        reference_for(builtin_experiment('ex_4_2_kinetic').problem)


def test_reference_command(tmp_path):
    out = StringIO()
    call_command('reference', 'ex_4_1_3', cells=20, steps=200, out=str(tmp_path), stdout=out)
    assert (tmp_path / 'reference.csv').exists()
    assert (tmp_path / 'reference.meta.json').exists()
    assert 'diffusion_fd_1d' in out.getvalue()
    loaded = ReferenceField.load(tmp_path / 'reference.csv')
    assert loaded.times.tolist() == pytest.approx([0.01, 0.05, 0.15, 2.0])


def test_reference_command_without_solver(tmp_path):
    with pytest.raises(CommandError) as excinfo:
        call_command('reference', 'ex_4_2_kinetic', out=str(tmp_path), stdout=StringIO())
    assert excinfo.value.returncode == 4


def test_unknown_example(tmp_path):
    with pytest.raises(CommandError) as excinfo:
        call_command('reproduce', 'ex_9_9_9', out=str(tmp_path), stdout=StringIO())
    assert excinfo.value.returncode == 2


# EVALUATION

def test_exact_prediction_has_zero_error(tmp_path):
    """rho_theta == rho_ref gives zero errors and every output file."""
    config = builtin_experiment('ex_4_1_3')
    grid = Grid1D(10, 0.0, 1.0, 0.05, 2.0)
    reference = ReferenceField([0.05, 0.15], np.ones((2, 10)), grid, 'ex_4_1_3', 'manual')
    result = evaluate_field(AnalyticField(config.problem, lambda v: 1.0), config, tmp_path, reference, plot=True)
    assert set(result.errors) == {'0.05', '0.15', 'space_time'}
    assert max(result.errors.values()) == pytest.approx(0.0, abs=1e-14)
    result.validate()
    assert read_errors(result.errors_path) == result.errors
    prediction = pd.read_csv(result.prediction_path)
    assert list(prediction.columns) == ['t', 'x', 'rho']
    assert len(prediction) == 20
    frame = pd.read_csv(result.result_path)
    assert {'rho_pred', 'rho_ref', 'abs_err'} <= set(frame.columns)
    assert frame['abs_err'].max() <= 1e-14
    assert result.plot_path.exists()
    assert result.reference_path == tmp_path / 'reference.csv'
    np.testing.assert_array_equal(ReferenceField.load(result.reference_path).values, reference.values)
    assert (tmp_path / 'config.echo').read_text().startswith('[problem]')


def test_expectation_of_the_manufactured_solution(tmp_path):
    """E[rho] by Monte Carlo over z matches t x (1 - x) / 2 within sampling error."""
    config = builtin_experiment('uq_problem_1')
    reference = manufactured_reference(config.problem, Grid1D.for_problem(config.problem, cells=16, steps=10))
    result = evaluate_field(manufactured_field(config.problem), config, tmp_path, reference, mc_draws=200)
    assert max(result.errors.values()) < 0.05
    assert 0.0 < result.max_standard_error < 0.05
    assert 'std_err' in pd.read_csv(result.prediction_path).columns


def test_evaluation_without_reference(tmp_path):
    config = builtin_experiment('ex_4_1_3')
    result = evaluate_field(AnalyticField(config.problem, lambda v: 0.5), config, tmp_path)
    assert result.errors == {}
    assert result.result_path is None
    assert sorted(pd.read_csv(result.prediction_path)['t'].unique()) == pytest.approx([0.01, 0.05, 0.15, 2.0])


def test_result_validation_finds_missing_files(tmp_path):
    result = ExperimentResult('ex_4_1_3', 'ma_apnn', {}, tmp_path / 'prediction.csv', tmp_path / 'config.echo')
    with pytest.raises(RuntimeError):
        result.validate()


# TRAINING RUNS

def test_reproduce_small_run(small_config, tmp_path):
    out = StringIO()
    run = tmp_path / 'run'
    call_command('reproduce', 'ex_4_1_3', config=str(small_config), out=str(run), stdout=out)
    for name in ('prediction.csv', 'result.csv', 'errors.csv', 'telemetry.csv', 'checkpoint.pt', 'config.echo'):
        assert (run / name).exists(), name
    assert len(pd.read_csv(run / 'telemetry.csv')) == 2
    errors = read_errors(run / 'errors.csv')
    assert set(errors) == {'0.01', '0.05', '0.15', '2', 'space_time'}
    assert all(np.isfinite(v) and v >= 0.0 for v in errors.values())
    assert "Reproduced 'ex_4_1_3' (ma_apnn)" in out.getvalue()


def test_reproduce_rejects_a_config_for_another_example(small_config, tmp_path):
    with pytest.raises(CommandError) as excinfo:
        call_command('reproduce', 'ex_4_1_1', config=str(small_config), out=str(tmp_path), stdout=StringIO())
    assert excinfo.value.returncode == 2


def test_train_then_evaluate(small_config, tmp_path):
    run, refs, evaluation = tmp_path / 'run', tmp_path / 'refs', tmp_path / 'eval'
    call_command('train', config=str(small_config), out=str(run), mode='pinn', stdout=StringIO())
    assert (run / 'checkpoint.pt').exists()
    call_command('reference', 'ex_4_1_3', cells=20, steps=200, out=str(refs), stdout=StringIO())

    out = StringIO()
    call_command('evaluate', config=str(small_config), checkpoint=str(run / 'checkpoint.pt'),
                 reference=str(refs / 'reference.csv'), out=str(evaluation), plot=True, stdout=out)
    assert (evaluation / 'errors.csv').exists()
    assert (evaluation / 'plot.svg').exists()
    assert 'L2 relative error' in out.getvalue()

    with pytest.raises(CommandError) as excinfo:
        call_command('evaluate', config=str(small_config), checkpoint=str(run / 'checkpoint.pt'),
                     reference=str(tmp_path / 'absent.csv'), out=str(evaluation), stdout=StringIO())
    assert excinfo.value.returncode == 4


def test_resume_continues_the_step_count(small_config, tmp_path):
    run = tmp_path / 'run'
    call_command('train', config=str(small_config), out=str(run), stdout=StringIO())
    out = StringIO()
    call_command('train', config=str(small_config), out=str(run), max_steps=4, resume=True, stdout=out)
    assert len(pd.read_csv(run / 'telemetry.csv')) == 2
    assert "Trained 'ex_4_1_3'" in out.getvalue()


# PLOTS

def test_plot_identical_1d_fields(tmp_path):
    x = np.linspace(0.0, 1.0, 11)
    ref = _field_csv(tmp_path / 'ref.csv', [0.1, 0.5], x, 1.0 - x)
    pred = _field_csv(tmp_path / 'pred.csv', [0.1, 0.5], x, 1.0 - x)
    out = StringIO()
    call_command('plot', str(pred), str(ref), out=str(tmp_path / 'plot.svg'), label='PINNs', stdout=out)
    assert (tmp_path / 'plot.svg').read_text().lstrip().startswith('<?xml')
    assert 'Plot written' in out.getvalue()


def test_plot_2d_heatmaps_on_different_grids(tmp_path):
    fine = np.linspace(0.05, 0.95, 10)
    coarse = np.linspace(0.1, 0.9, 5)
    fx, fy = (a.reshape(-1) for a in np.meshgrid(fine, fine, indexing='ij'))
    cx, cy = (a.reshape(-1) for a in np.meshgrid(coarse, coarse, indexing='ij'))
    ref = _field_csv(tmp_path / 'ref.csv', [0.4], fx, fx * fy, y=fy)
    pred = _field_csv(tmp_path / 'pred.csv', [0.4], cx, cx * cy, y=cy)
    path = plot_comparison(pred, ref, tmp_path / 'heat.svg')
    assert path.exists()


def test_plot_rejects_empty_csv(tmp_path):
    ref = _field_csv(tmp_path / 'ref.csv', [0.1], np.linspace(0.0, 1.0, 5), np.zeros(5))
    empty = tmp_path / 'empty.csv'
    empty.write_text('')
    with pytest.raises(CommandError) as excinfo:
        call_command('plot', str(empty), str(ref), out=str(tmp_path / 'plot.svg'), stdout=StringIO())
    assert excinfo.value.returncode == 2
    assert not (tmp_path / 'plot.svg').exists()


def test_plot_rejects_missing_snapshots(tmp_path):
    x = np.linspace(0.0, 1.0, 5)
    ref = _field_csv(tmp_path / 'ref.csv', [0.1, 0.2], x, x)
    pred = _field_csv(tmp_path / 'pred.csv', [0.1], x, x)
    with pytest.raises(ConfigurationError):
        plot_comparison(pred, ref, tmp_path / 'plot.svg')
