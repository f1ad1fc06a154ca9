"""
Experiment engine

Ties the numerics together for the management commands: pick the reference
solver for a problem's regime, train the constrained network, sample
rho_theta = <f_theta> on the reference grid and write the result files.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import torch
from django.conf import settings

from algorithms.exceptions import ConfigurationError, MissingReferenceError, NonFiniteLossError
from algorithms.experiment_config import ExperimentConfig, builtin_experiment, dump_config, load_config
from algorithms.losses.weights import validate_weight_bound
from algorithms.network.checkpoint import load_checkpoint
from algorithms.network.mlp import init_network
from algorithms.problems.builtins import builtin_problem
from algorithms.problems.config import ProblemConfig
from algorithms.problems.fields import TransportField, constrained_network
from algorithms.quadrature.angular import AngularQuadrature
from algorithms.quadrature.sampling import sample_domain
from algorithms.solvers.diffusion import (
    MAX_DIFFUSIVE_EPSILON,
    MC_REFERENCE_DRAWS,
    diffusion_expectation_1d,
    diffusion_fd_1d,
    diffusion_fd_2d,
)
from algorithms.solvers.errors import error_table
from algorithms.solvers.fields import Grid, Grid1D, Grid2D, ReferenceField, snap_times
from algorithms.solvers.manufactured import manufactured_reference
from algorithms.solvers.transport import MIN_KINETIC_EPSILON, fixed_random_inputs, grid_rows, sn_transport_1d
from algorithms.training.adam import TrainState
from algorithms.training.loop import TrainingOutcome, train

from .utils import errors_frame, plot_comparison, prediction_frame, result_frame, write_csv

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

EXIT_CODES = (
    (ConfigurationError, 2),
    (NonFiniteLossError, 3),
    (MissingReferenceError, 4),
)

# rows of (point, direction) pairings evaluated at once
MC_BATCH_ROWS = 2 ** 18

CHECKPOINT_NAME = 'checkpoint.pt'
CONFIG_ECHO_NAME = 'config.echo'


def exit_code_for(exc: BaseException) -> int:
    """Process exit code for an exception: 2 config, 3 divergence, 4 missing reference, 1 otherwise."""
    for kind, code in EXIT_CODES:
        if isinstance(exc, kind):
            return code
    return 1


# RESULTS

@dataclass
class ExperimentResult:
    problem_id: str
    mode: str
    errors: Dict[str, float]
    prediction_path: Path
    config_echo_path: Path
    telemetry_path: Optional[Path] = None
    result_path: Optional[Path] = None
    errors_path: Optional[Path] = None
    checkpoint_path: Optional[Path] = None
    plot_path: Optional[Path] = None
    reference_path: Optional[Path] = None
    training_seconds: float = 0.0
    initial_loss: Optional[float] = None
    final_loss: Optional[float] = None
    max_standard_error: Optional[float] = None

    @property
    def loss_ratio(self) -> Optional[float]:
        if self.initial_loss is None or self.final_loss is None:
            return None
        return self.final_loss / self.initial_loss if self.initial_loss > 0.0 else 0.0

    def paths(self) -> List[Path]:
        candidates = (self.prediction_path, self.config_echo_path, self.telemetry_path, self.result_path,
                      self.errors_path, self.checkpoint_path, self.plot_path, self.reference_path)
        return [Path(p) for p in candidates if p is not None]

    def validate(self) -> "ExperimentResult":
        """
        Raises:
            RuntimeError: a listed file is missing or an error is negative or non-finite
        """
        missing = [str(p) for p in self.paths() if not p.exists()]
        if missing:
            raise RuntimeError(f"Result files were not written: {', '.join(missing)}")
        bad = {k: v for k, v in self.errors.items() if not (math.isfinite(v) and v >= 0.0)}
        if bad:
            raise RuntimeError(f"Invalid L2 errors: {bad}")
        return self


@dataclass
class TrainingArtifacts:
    problem_id: str
    mode: str
    checkpoint_path: Path
    telemetry_path: Path
    config_echo_path: Path
    outcome: TrainingOutcome = field(repr=False)


# ENVIRONMENT

def maapnn_setting(name: str, default=None):
    return getattr(settings, 'MAAPNN', {}).get(name, default)


def configure_torch(deterministic: bool = False):
    threads = maapnn_setting('TORCH_THREADS')
    if threads:
        torch.set_num_threads(int(threads))
    if deterministic:
        torch.use_deterministic_algorithms(True)


def output_dir(out: Optional[PathLike], name: str) -> Path:
    """--out when given, else <MAAPNN OUTPUT_DIR>/<name>."""
    path = Path(out) if out else Path(maapnn_setting('OUTPUT_DIR', 'runs')) / name
    path.mkdir(parents=True, exist_ok=True)
    return path


def experiment_config(problem_id: Optional[str] = None, config_path: Optional[PathLike] = None,
                      paper_scale: bool = False, mode: Optional[str] = None, seed: Optional[int] = None,
                      max_steps: Optional[int] = None, deterministic: Optional[bool] = None) -> ExperimentConfig:
    """
    The builtin experiment for problem_id or the config file, with flag overrides.

    Raises:
        ConfigurationError: unknown id, bad file, or a file for another problem
    """
    if config_path is not None:
        config = load_config(config_path)
        if problem_id is not None and config.problem.id != problem_id:
            raise ConfigurationError(f"Config {config_path} describes '{config.problem.id}', not '{problem_id}'")
    elif problem_id is not None:
        config = builtin_experiment(problem_id, paper_scale)
        if seed is None:
            seed = maapnn_setting('DEFAULT_SEED')
    else:
        raise ConfigurationError("Give an example id or --config")
    return config.with_overrides(mode=mode, seed=seed, max_steps=max_steps, deterministic=deterministic)


def write_config_echo(config: ExperimentConfig, out: Path) -> Path:
    path = out / CONFIG_ECHO_NAME
    path.write_text(dump_config(config))
    return path


# REFERENCES

def reference_for(problem: ProblemConfig, cells: Optional[int] = None, steps: Optional[int] = None,
                  draws: int = MC_REFERENCE_DRAWS, seed: int = 0) -> ReferenceField:
    """
    Reference rho for a problem, by regime.

    manufactured source        exact E[rho]
    random inputs (1D)         Monte Carlo average of diffusion solves
    2D, eps <= 1e-2            diffusion_fd_2d
    1D, eps <= 1e-2            diffusion_fd_1d
    1D, eps > 1e-2             sn_transport_1d

    Raises:
        MissingReferenceError: no solver covers the problem (2D kinetic regime, 2D random inputs)
    """
    grid_args = {k: v for k, v in (('cells', cells), ('steps', steps)) if v is not None}
    if problem.source.kind == 'uq_manufactured':
        return manufactured_reference(problem, Grid1D.for_problem(problem, **grid_args))
    if problem.dimension == 2:
        if problem.uq_dim > 0 or problem.epsilon > MAX_DIFFUSIVE_EPSILON:
            raise MissingReferenceError(
                f"No reference solver for '{problem.id}': 2D problems need eps <= {MAX_DIFFUSIVE_EPSILON} "
                f"and no random inputs, got eps = {problem.epsilon}, uq_dim = {problem.uq_dim}"
            )
        return diffusion_fd_2d(problem, Grid2D.for_problem(problem, **grid_args))

    grid = Grid1D.for_problem(problem, **grid_args)
    if problem.uq_dim > 0:
        return diffusion_expectation_1d(problem, grid, draws=draws, seed=seed)
    if problem.epsilon <= MAX_DIFFUSIVE_EPSILON:
        return diffusion_fd_1d(problem, grid)
    return sn_transport_1d(problem, grid, allow_small_epsilon=problem.epsilon < MIN_KINETIC_EPSILON)


def run_reference(problem_id: str, out: Optional[PathLike] = None, cells: Optional[int] = None,
                  steps: Optional[int] = None, draws: int = MC_REFERENCE_DRAWS, seed: int = 0,
                  config_path: Optional[PathLike] = None) -> Tuple[ReferenceField, Path]:
    """Solve and save the reference of a builtin example (or of a config file's problem)."""
    problem = load_config(config_path).problem if config_path else builtin_problem(problem_id)
    reference = reference_for(problem, cells, steps, draws, seed)
    path = reference.save(output_dir(out, problem.id) / 'reference.csv')
    logger.info(f"Reference for '{problem.id}' by {reference.scheme} at t = {reference.times.tolist()}")
    return reference, path


# PREDICTIONS

def _rows_per_batch(points: int, directions: int) -> int:
    return max(1, MC_BATCH_ROWS // max(1, points * directions))


def predict_density(field: TransportField, grid: Grid, times, quad: AngularQuadrature,
                    z=None) -> Dict[float, np.ndarray]:
    """rho = <f> on the cell centers at each time, with z fixed (zeros by default)."""
    problem = field.problem
    z = fixed_random_inputs(problem, z)
    preds = {}
    with torch.no_grad():
        for t in times:
            rows = grid_rows(float(t), grid.centers(), z)
            preds[float(t)] = field.density(rows, quad).numpy().reshape(grid.shape)
    return preds


def expected_density(field: TransportField, grid: Grid, t: float, quad: AngularQuadrature,
                     draws: int, seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Monte Carlo E[rho] over z ~ U([-1, 1]^d) on the cell centers, with its standard error.
    """
    problem = field.problem
    if problem.uq_dim == 0:
        raise ValueError(f"Problem '{problem.id}' has no random input")
    if draws < 2:
        raise ValueError(f"Monte Carlo expectation needs at least 2 draws, got {draws}")
    rng = np.random.default_rng(seed)
    samples = rng.uniform(-1.0, 1.0, size=(draws, problem.uq_dim))
    centers = [c.reshape(-1) for c in grid.centers()]
    n = centers[0].shape[0]
    batch = _rows_per_batch(n, quad.size)
    total = np.zeros(n)
    squares = np.zeros(n)
    with torch.no_grad():
        for start in range(0, draws, batch):
            block = samples[start:start + batch]
            b = block.shape[0]
            rows = np.column_stack(
                [np.full(n * b, t)] + [np.tile(c, b) for c in centers] + [np.repeat(block, n, axis=0)]
            )
            rho = field.density(rows, quad).numpy().reshape(b, n)
            total += rho.sum(axis=0)
            squares += (rho ** 2).sum(axis=0)
    mean = total / draws
    variance = np.maximum(squares / draws - mean ** 2, 0.0) * draws / (draws - 1)
    return mean.reshape(grid.shape), np.sqrt(variance / draws).reshape(grid.shape)


def evaluate_field(field: TransportField, config: ExperimentConfig, out: Path,
                   reference: Optional[ReferenceField] = None, mc_draws: Optional[int] = None,
                   plot: bool = False) -> ExperimentResult:
    """
    Sample rho_theta at the snapshot times and write prediction, result and error files.

    Without a reference, rho is sampled on the default solver grid at the
    problem's snapshot times and no errors are computed. Problems with random
    inputs report E[rho] with a std_err column.
    """
    problem = config.problem
    if reference is not None and reference.dimension != problem.dimension:
        raise ConfigurationError(
            f"Reference '{reference.problem_id}' is {reference.dimension}D, problem '{problem.id}' is {problem.dimension}D"
        )
    if reference is not None and reference.problem_id != problem.id:
        logger.warning(f"Evaluating '{problem.id}' against a reference written for '{reference.problem_id}'")
    if reference is not None:
        grid, times = reference.grid, reference.times
    else:
        grid = Grid1D.for_problem(problem) if problem.dimension == 1 else Grid2D.for_problem(problem)
        _, times = snap_times(grid, problem.snapshots)
    quad = config.sampling.quadrature(problem)

    std_errors = None
    if problem.uq_dim > 0:
        draws = int(mc_draws or maapnn_setting('MC_DRAWS', 10_000))
        preds, std_errors = {}, {}
        for t in times:
            preds[float(t)], std_errors[float(t)] = expected_density(field, grid, float(t), quad, draws,
                                                                     seed=config.training.seed)
        logger.info(f"E[rho] for '{problem.id}' from {draws} draws of z")
    else:
        preds = predict_density(field, grid, times, quad)

    prediction_path = write_csv(prediction_frame(grid, preds, std_errors), out / 'prediction.csv')
    result = ExperimentResult(problem.id, config.mode, {}, prediction_path, write_config_echo(config, out))
    if std_errors:
        result.max_standard_error = float(max(s.max() for s in std_errors.values()))
    if reference is None:
        logger.warning(f"No reference for '{problem.id}'; prediction written without errors")
        return result

    result.errors = error_table(preds, reference)
    result.result_path = write_csv(result_frame(reference, preds, std_errors), out / 'result.csv')
    result.errors_path = write_csv(errors_frame(result.errors), out / 'errors.csv')
    for snapshot, value in result.errors.items():
        logger.info(f"'{problem.id}' ({config.mode}) L2 relative error at {snapshot}: {value:.3e}")
    if plot:
        label = 'MA-APNNs' if config.mode == 'ma_apnn' else 'PINNs'
        result.reference_path = reference.save(out / 'reference.csv')
        result.plot_path = plot_comparison(result.prediction_path, result.reference_path, out / 'plot.svg', label)
    return result


# TRAINING

def _train(config: ExperimentConfig, out: Path, resume: bool = False) -> TrainingOutcome:
    problem = config.problem
    configure_torch(config.training.deterministic)
    if config.mode == 'ma_apnn':
        validate_weight_bound(problem, config.loss)
    quad = config.sampling.quadrature(problem)
    samples = sample_domain(problem, config.sampling.counts(), quad, config.sampling.seed_offset)
    spec = config.spec
    checkpoint_path = out / CHECKPOINT_NAME
    state = None
    if resume and checkpoint_path.exists():
        state = TrainState.from_checkpoint(load_checkpoint(checkpoint_path, expected_spec=spec))
        logger.info(f"Resuming '{problem.id}' from step {state.step} of {checkpoint_path}")
    return train(problem, spec, init_network(spec, config.training.seed), config.loss, samples, config.training,
                 quad=quad, mode=config.mode, state=state, checkpoint_path=checkpoint_path,
                 extra={'problem_id': problem.id, 'mode': config.mode})


def run_train(config: ExperimentConfig, out: Path, resume: bool = False) -> TrainingArtifacts:
    """Train from a config; writes checkpoint.pt, telemetry.csv and config.echo."""
    outcome = _train(config, out, resume)
    return TrainingArtifacts(
        config.problem.id, config.mode, out / CHECKPOINT_NAME,
        write_csv(outcome.telemetry, out / 'telemetry.csv'), write_config_echo(config, out), outcome,
    )


def run_experiment(config: ExperimentConfig, out: Path, reference: Optional[ReferenceField] = None,
                   plot: bool = False, mc_draws: Optional[int] = None) -> ExperimentResult:
    """Train, then evaluate the best parameters against `reference`."""
    logger.info(f"Experiment '{config.problem.id}' ({config.mode}) writing to {out}")
    artifacts = run_train(config, out)
    outcome = artifacts.outcome
    field = constrained_network(config.problem, outcome.best_params, config.spec)
    result = evaluate_field(field, config, out, reference, mc_draws, plot)
    result.telemetry_path = artifacts.telemetry_path
    result.checkpoint_path = artifacts.checkpoint_path
    result.training_seconds = outcome.seconds
    result.initial_loss = outcome.initial_loss
    result.final_loss = outcome.final_loss
    logger.info(
        f"'{config.problem.id}' trained in {outcome.seconds:.1f}s, loss {outcome.initial_loss:.3e} -> "
        f"{outcome.final_loss:.3e} (ratio {result.loss_ratio:.3e})"
    )
    return result.validate()


def run_reproduce(problem_id: str, out: Optional[PathLike] = None, config_path: Optional[PathLike] = None,
                  paper_scale: bool = False, mode: Optional[str] = None, seed: Optional[int] = None,
                  max_steps: Optional[int] = None, deterministic: Optional[bool] = None,
                  plot: bool = False, mc_draws: Optional[int] = None) -> ExperimentResult:
    """
    Reproduce a builtin example: reference, training, error table.

    Problems without a reference solver (the 2D kinetic regime) are trained
    and sampled; their result carries the loss ratio and no errors.
    """
    config = experiment_config(problem_id, config_path, paper_scale, mode, seed, max_steps, deterministic)
    out = output_dir(out, f"{config.problem.id}_{config.mode}")
    try:
        reference = reference_for(config.problem)
    except MissingReferenceError as exc:
        logger.warning(f"{exc}; reporting the loss decrease only")
        reference = None
    return run_experiment(config, out, reference, plot, mc_draws)


def run_evaluate(config: ExperimentConfig, checkpoint_path: PathLike, out: Path,
                 reference_path: Optional[PathLike] = None, plot: bool = False,
                 mc_draws: Optional[int] = None) -> ExperimentResult:
    """
    Evaluate a checkpoint (its best parameters when recorded).

    Raises:
        ConfigurationError: checkpoint written for another network
        MissingReferenceError: reference_path given but absent
    """
    checkpoint = load_checkpoint(checkpoint_path, expected_spec=config.spec)
    params = checkpoint.best_params if checkpoint.best_params is not None else checkpoint.params
    reference = ReferenceField.load(reference_path) if reference_path else None
    field = constrained_network(config.problem, params, config.spec)
    result = evaluate_field(field, config, out, reference, mc_draws, plot)
    result.checkpoint_path = Path(checkpoint_path)
    return result.validate()
