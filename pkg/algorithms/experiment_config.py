"""
Experiment settings and their TOML file format

An ExperimentConfig bundles everything a run needs: the physical problem,
the network widths, loss hyperparameters and mode, collocation counts and
optimizer settings. builtin_experiment(id) gives the defaults of every
reproduction example at desk scale, or at the published sizes with
paper_scale=True.

Config files have the sections [problem], [network], [loss], [sampling]
and [training]. [problem] may name a builtin `base` whose settings the
listed keys override. Unknown keys and wrong value types are rejected with
the section and field in the message.
"""

import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import tomli_w

from algorithms.exceptions import ConfigurationError
from algorithms.losses.weights import LOSS_MODES, LossHyper
from algorithms.network.mlp import NetworkSpec
from algorithms.problems.builtins import builtin_problem
from algorithms.problems.config import FACE_NAMES, ProblemConfig
from algorithms.quadrature.angular import AngularQuadrature, quadrature_for
from algorithms.quadrature.sampling import SampleCounts
from algorithms.training.adam import TrainConfig

logger = logging.getLogger(__name__)

DESK_HIDDEN_WIDTHS = (24, 24, 24)
PAPER_HIDDEN_WIDTHS = (40, 40, 40, 40)
DESK_MAX_STEPS = 20000
PAPER_MAX_STEPS = 100000
DEFAULT_CONSERVATION_POINTS = 64


@dataclass(frozen=True)
class NetworkSettings:
    hidden_widths: Tuple[int, ...] = DESK_HIDDEN_WIDTHS
    hidden_activation: str = 'tanh'
    output_activation: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, 'hidden_widths', tuple(int(w) for w in self.hidden_widths))

    def spec(self, problem: ProblemConfig) -> NetworkSpec:
        """Widths [m0, hidden..., 1] with m0 taken from the problem's input layout."""
        widths = (problem.network_input_width,) + self.hidden_widths + (1,)
        return NetworkSpec(widths, self.hidden_activation, self.output_activation or problem.output_activation)

    def to_dict(self) -> Dict[str, Any]:
        data = {'hidden_widths': list(self.hidden_widths), 'hidden_activation': self.hidden_activation}
        if self.output_activation:
            data['output_activation'] = self.output_activation
        return data


@dataclass(frozen=True)
class SamplingSettings:
    n_int: int = 1000
    n_sb: int = 200
    n_tb: int = 200
    n_c: int = 0
    n_angles: int = 16
    seed_offset: int = 0

    def __post_init__(self):
        if self.n_angles < 1:
            raise ConfigurationError(f"sampling.n_angles must be positive, got {self.n_angles}")
        if self.seed_offset < 0:
            raise ConfigurationError(f"sampling.seed_offset must be nonnegative, got {self.seed_offset}")

    def counts(self) -> SampleCounts:
        return SampleCounts(self.n_int, self.n_sb, self.n_tb, self.n_c)

    def quadrature(self, problem: ProblemConfig) -> AngularQuadrature:
        return quadrature_for(problem.dimension, self.n_angles)

    def to_dict(self) -> Dict[str, Any]:
        return {'n_int': self.n_int, 'n_sb': self.n_sb, 'n_tb': self.n_tb, 'n_c': self.n_c,
                'n_angles': self.n_angles, 'seed_offset': self.seed_offset}


@dataclass(frozen=True)
class ExperimentConfig:
    problem: ProblemConfig
    network: NetworkSettings = field(default_factory=NetworkSettings)
    loss: LossHyper = field(default_factory=LossHyper)
    mode: str = 'ma_apnn'
    sampling: SamplingSettings = field(default_factory=SamplingSettings)
    training: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.mode not in LOSS_MODES:
            raise ConfigurationError(f"loss.mode '{self.mode}' is unknown. Use one of: {', '.join(LOSS_MODES)}")
        if self.loss.lambda_c > 0.0 and self.sampling.n_c == 0:
            raise ConfigurationError("loss.lambda_c > 0 needs sampling.n_c > 0 conservation points")

    @property
    def spec(self) -> NetworkSpec:
        return self.network.spec(self.problem)

    def with_overrides(self, mode: Optional[str] = None, seed: Optional[int] = None,
                       max_steps: Optional[int] = None, deterministic: Optional[bool] = None) -> "ExperimentConfig":
        """Apply command-line flags; None leaves a setting as configured."""
        training = self.training
        if seed is not None:
            training = training.with_changes(seed=seed)
        if max_steps is not None:
            training = training.with_changes(max_steps=max_steps)
        if deterministic is not None:
            training = training.with_changes(deterministic=deterministic)
        return replace(self, mode=mode or self.mode, training=training)

    def to_dict(self) -> Dict[str, Any]:
        loss = {'mode': self.mode}
        loss.update(self.loss.to_dict())
        return {
            'problem': self.problem.to_dict(),
            'network': self.network.to_dict(),
            'loss': loss,
            'sampling': self.sampling.to_dict(),
            'training': self.training.to_dict(),
        }


# BUILTIN EXPERIMENTS

# (beta1, beta2, lambda_b, lambda_i, lambda_c), desk (n_int, n_sb, n_tb), paper (n_int, n_sb, n_tb)
_BUILTIN_SETTINGS = {
    'ex_4_1_1': ((1e-3, 1e-4, 1.0, 1.0, 0.0), (2000, 400, 400), (2000, 400, 400)),
    'ex_4_1_2': ((1e-3, 1e-5, 0.0, 1000.0, 1.0), (2000, 500, 1000), (2000, 500, 1000)),
    'ex_4_1_2_soft': ((1e-3, 1e-5, 1.0, 1000.0, 1.0), (2000, 500, 1000), (2000, 500, 1000)),
    'ex_4_1_3': ((1e-5, 1e-16, 10.0, 1.0, 0.0), (1000, 200, 200), (1000, 200, 200)),
    'ex_4_1_4': ((1e-5, 1e-16, 1.0, 1.0, 0.0), (1000, 200, 400), (1000, 200, 400)),
    'ex_4_1_5': ((1e-5, 1e-12, 1.0, 1.0, 0.0), (1000, 200, 400), (1000, 200, 400)),
    'ex_4_2_kinetic': ((1e-6, 1e-7, 0.0, 0.0, 0.0), (2000, 0, 0), (2000, 0, 0)),
    'ex_4_2_diffusion': ((1e-5, 1e-16, 0.0, 0.0, 0.0), (2000, 0, 0), (2000, 0, 0)),
    'uq_problem_1': ((1e-5, 1e-7, 0.0, 0.0, 0.0), (1000, 0, 0), (5000, 0, 0)),
    'uq_problem_2': ((1e-5, 1e-16, 1.0, 1.0, 0.0), (2048, 768, 1536), (2048, 768, 1536)),
}


def builtin_experiment(problem_id: str, paper_scale: bool = False) -> ExperimentConfig:
    """
    Default experiment for a builtin example.

    Desk scale uses hidden widths [24, 24, 24] and 20000 steps; paper scale
    the published [40, 40, 40, 40] networks and sample counts.
    """
    problem = builtin_problem(problem_id)
    (beta1, beta2, lambda_b, lambda_i, lambda_c), desk, paper = _BUILTIN_SETTINGS[problem_id]
    n_int, n_sb, n_tb = paper if paper_scale else desk
    n_c = DEFAULT_CONSERVATION_POINTS if lambda_c > 0.0 else 0
    return ExperimentConfig(
        problem=problem,
        network=NetworkSettings(PAPER_HIDDEN_WIDTHS if paper_scale else DESK_HIDDEN_WIDTHS),
        loss=LossHyper(beta1, beta2, lambda_b, lambda_i, lambda_c),
        sampling=SamplingSettings(n_int, n_sb, n_tb, n_c),
        training=TrainConfig(max_steps=PAPER_MAX_STEPS if paper_scale else DESK_MAX_STEPS),
    )


# FILE FORMAT

_SECTIONS = ('problem', 'network', 'loss', 'sampling', 'training')

_PROBLEM_KEYS = {
    'id': str, 'base': str, 'dimension': int, 'epsilon': float, 'domain': list, 'time_interval': list,
    'uq_dim': int, 'hard_constraint': str, 'output_activation': str, 'snapshots': list,
    'sigma': dict, 'alpha': dict, 'source': dict, 'boundary': dict, 'initial': dict,
}
_COEFFICIENT_KEYS = {'kind': str, 'value': float, 'name': str}
_BOUNDARY_KEYS = {'kind': str, **{name: float for name in FACE_NAMES}}
_INITIAL_KEYS = {'kind': str, 'value': float}
_NETWORK_KEYS = {'hidden_widths': list, 'hidden_activation': str, 'output_activation': str}
_LOSS_KEYS = {
    'mode': str, 'beta1': float, 'beta2': float, 'lambda_b': float, 'lambda_i': float, 'lambda_c': float,
    'lambda_g': float, 'lambda_d': float, 'weight_exponent': str, 'include_ab': bool,
}
_SAMPLING_KEYS = {'n_int': int, 'n_sb': int, 'n_tb': int, 'n_c': int, 'n_angles': int, 'seed_offset': int}
_TRAINING_KEYS = {
    'max_steps': int, 'learning_rate': float, 'beta1': float, 'beta2': float, 'adam_epsilon': float,
    'resample_every': int, 'log_every': int, 'checkpoint_every': int, 'deterministic': bool, 'seed': int,
    'lr_decay_rate': float, 'lr_decay_every': int,
}


def _check_table(section: str, table: Any, schema: Dict[str, type]) -> Dict[str, Any]:
    if not isinstance(table, dict):
        raise ConfigurationError(f"[{section}] must be a table")
    checked = {}
    for key, value in table.items():
        if key not in schema:
            raise ConfigurationError(f"[{section}] unknown field '{key}'. Known fields: {', '.join(schema)}")
        expected = schema[key]
        if expected is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if expected is int and isinstance(value, bool) or not isinstance(value, expected):
            raise ConfigurationError(
                f"[{section}] field '{key}' must be {expected.__name__}, got {type(value).__name__} ({value!r})"
            )
        checked[key] = value
    return checked


def _problem_from_table(table: Dict[str, Any]) -> ProblemConfig:
    data = _check_table('problem', table, _PROBLEM_KEYS)
    for name in ('sigma', 'alpha', 'source'):
        if name in data:
            data[name] = _check_table(f'problem.{name}', data[name], _COEFFICIENT_KEYS)
    if 'boundary' in data:
        data['boundary'] = _check_table('problem.boundary', data['boundary'], _BOUNDARY_KEYS)
    if 'initial' in data:
        data['initial'] = _check_table('problem.initial', data['initial'], _INITIAL_KEYS)
    base_id = data.pop('base', None)
    base = builtin_problem(base_id) if base_id else None
    if base is not None and 'boundary' in data:
        data['boundary'] = {**base.boundary.to_dict(base.dimension), **data['boundary']}
    try:
        return ProblemConfig.from_dict(data, base)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"[problem] {exc}") from exc


def parse_config(data: Dict[str, Any]) -> ExperimentConfig:
    """
    Build an ExperimentConfig from the parsed TOML document.

    When [problem] names a builtin id (as `id` without other physics keys, or
    as `base`), the builtin experiment supplies every default.

    Raises:
        ConfigurationError: unknown sections or fields, wrong types, invalid values
    """
    unknown = [name for name in data if name not in _SECTIONS]
    if unknown:
        raise ConfigurationError(f"Unknown section [{unknown[0]}]. Sections: {', '.join(_SECTIONS)}")
    if 'problem' not in data:
        raise ConfigurationError("Config needs a [problem] section")

    problem_table = data['problem']
    base_id = problem_table.get('base') if isinstance(problem_table, dict) else None
    defaults = None
    if base_id:
        defaults = builtin_experiment(base_id)
    elif isinstance(problem_table, dict) and set(problem_table) == {'id'}:
        defaults = builtin_experiment(problem_table['id'])
    problem = defaults.problem if defaults and set(problem_table) == {'id'} else _problem_from_table(problem_table)
    defaults = defaults or ExperimentConfig(problem)

    network = _check_table('network', data.get('network', {}), _NETWORK_KEYS)
    loss = _check_table('loss', data.get('loss', {}), _LOSS_KEYS)
    sampling = _check_table('sampling', data.get('sampling', {}), _SAMPLING_KEYS)
    training = _check_table('training', data.get('training', {}), _TRAINING_KEYS)
    mode = loss.pop('mode', defaults.mode)
    if any(not isinstance(w, int) or isinstance(w, bool) for w in network.get('hidden_widths', [])):
        raise ConfigurationError("[network] field 'hidden_widths' must be a list of integers")

    config = ExperimentConfig(
        problem=problem,
        network=replace(defaults.network, **network),
        loss=replace(defaults.loss, **loss),
        mode=mode,
        sampling=replace(defaults.sampling, **sampling),
        training=replace(defaults.training, **training),
    )
    config.network.spec(config.problem)  # widths and activations
    return config


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    Read an experiment config file.

    Raises:
        ConfigurationError: missing file, TOML syntax errors (with line and
            column) and everything parse_config rejects
    """
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Config file not found: {path}")
    try:
        data = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    config = parse_config(data)
    logger.debug(f"Loaded experiment '{config.problem.id}' from {path}")
    return config


def dump_config(config: ExperimentConfig) -> str:
    """TOML text that parse_config turns back into an equal config."""
    return tomli_w.dumps(config.to_dict())
