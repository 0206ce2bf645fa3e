"""Campaign configuration.

A configuration is a flat YAML (or JSON) mapping; nested mappings are
rejected. A run manifest is also accepted, in which case its ``parameters``
block is the configuration.
"""
import logging
import math
import os
from dataclasses import asdict, dataclass
from typing import Optional, Tuple

import yaml

from corank.constants import DEFAULT_EPSILON, DEFAULT_LO_TRIALS, DEFAULT_PRIME, DEFAULT_REDRAW_MASKS
from corank.constants import DEFAULT_WEIGHT_REDRAWS, SEED_ENV_VAR
from corank.errors import HypothesisViolationError, ParameterError, ParseError, UsageError
from corank.field import PrimeField
from corank.matrix import DIAGONAL_MODES, NONZERO_DIAGONAL

LOGGER = logging.getLogger(__name__)

RANK_AGREEMENT = 'rank-agreement'
DEPENDENCY_CLASSIFICATION = 'dependency-classification'
COUPON_THRESHOLD = 'coupon-threshold'
EXPOSURE_PROCESS = 'exposure-process'
DIAGONAL_PAIRING = 'diagonal-pairing'
NONSYMMETRIC_SINGULARITY = 'nonsymmetric-singularity'
DREGULAR_SINGULARITY = 'dregular-singularity'
SATURATION = 'saturation'
LINEAR_LO = 'linear-lo'
QUADRATIC_LO = 'quadratic-lo'

EXPERIMENT_NAMES = (
    RANK_AGREEMENT,
    DEPENDENCY_CLASSIFICATION,
    COUPON_THRESHOLD,
    EXPOSURE_PROCESS,
    DIAGONAL_PAIRING,
    NONSYMMETRIC_SINGULARITY,
    DREGULAR_SINGULARITY,
    SATURATION,
    LINEAR_LO,
    QUADRATIC_LO,
)
# Campaigns that sample Q(W, p) and therefore need p or c
SAMPLED_EXPERIMENTS = frozenset(EXPERIMENT_NAMES) - {COUPON_THRESHOLD, DREGULAR_SINGULARITY, LINEAR_LO}

FIXED_WEIGHTS = 'fixed'
RANDOM_WEIGHTS = 'random'
WEIGHT_MODELS = (FIXED_WEIGHTS, RANDOM_WEIGHTS)

DEFAULT_RHO = 0.1
DEFAULT_DIMENSIONS = (100, 400, 1600)

CONFIG_KEYS = (
    'experiment',
    'n',
    'p',
    'c',
    's',
    'trials',
    'seed',
    'diagonal_mode',
    'weight_redraws',
    'redraw_masks',
    'weight_model',
    'override_hypotheses',
    'workers',
    'epsilon',
    'd',
    'rho',
    'dimensions',
    'lo_trials',
    'prime',
)


def _fail(message, error=ParameterError):
    LOGGER.critical(message)
    raise error(message)


def resolve_seed(seed=None, environ=None):
    """Explicit seed, then the CORANK_SEED environment variable."""
    if seed is not None:
        return int(seed)
    environ = os.environ if environ is None else environ
    value = environ.get(SEED_ENV_VAR)
    if value is None or not value.strip():
        _fail(f'A master seed is required: pass --seed or set {SEED_ENV_VAR}.')
    try:
        return int(value)
    except ValueError:
        _fail(f'{SEED_ENV_VAR} must be an integer, got "{value}".')


def _parse_dimensions(value):
    if value is None:
        return DEFAULT_DIMENSIONS
    if isinstance(value, str):
        value = [part for part in value.split(',') if part.strip()]
    try:
        dimensions = tuple(int(part) for part in value)
    except (TypeError, ValueError):
        _fail(f'dimensions must be a comma separated list of integers, got "{value}".')
    if not dimensions or any(dimension < 1 for dimension in dimensions):
        _fail('dimensions must list at least one positive integer.')
    return dimensions


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    n: int
    seed: int
    trials: int
    s: int = 2
    p: Optional[float] = None
    c: Optional[float] = None
    diagonal_mode: str = NONZERO_DIAGONAL
    weight_redraws: int = DEFAULT_WEIGHT_REDRAWS
    redraw_masks: int = DEFAULT_REDRAW_MASKS
    weight_model: str = FIXED_WEIGHTS
    override_hypotheses: bool = False
    workers: Optional[int] = None
    epsilon: float = DEFAULT_EPSILON
    d: Optional[int] = None
    rho: float = DEFAULT_RHO
    dimensions: Tuple[int, ...] = DEFAULT_DIMENSIONS
    lo_trials: int = DEFAULT_LO_TRIALS
    prime: int = DEFAULT_PRIME

    def __post_init__(self):
        self.validate()

    @property
    def probability(self):
        """p itself, or c ln n / n."""
        if self.p is not None:
            return self.p
        if self.c is not None:
            return self.c * math.log(self.n) / self.n
        return None

    @property
    def field(self):
        return PrimeField(self.prime)

    def validate(self):
        if self.experiment not in EXPERIMENT_NAMES:
            message = f'Unknown experiment "{self.experiment}", valid names: {", ".join(EXPERIMENT_NAMES)}.'
            LOGGER.critical(message)
            raise UsageError(message, EXPERIMENT_NAMES)
        if self.n < 1:
            _fail(f'n must be at least 1, got {self.n}.')
        if self.trials < 1:
            _fail(f'trials must be at least 1, got {self.trials}.')
        if self.s < 1:
            _fail(f's must be at least 1, got {self.s}.')
        if self.p is not None and self.c is not None:
            _fail('Give either p or c, not both.')
        if self.diagonal_mode not in DIAGONAL_MODES:
            _fail(f'Unknown diagonal mode "{self.diagonal_mode}", expected one of {", ".join(DIAGONAL_MODES)}.')
        if self.weight_model not in WEIGHT_MODELS:
            _fail(f'Unknown weight model "{self.weight_model}", expected one of {", ".join(WEIGHT_MODELS)}.')
        if self.weight_redraws < 1 or self.redraw_masks < 0:
            _fail('weight_redraws must be positive and redraw_masks non-negative.')
        if self.workers is not None and self.workers < 1:
            _fail(f'workers must be at least 1, got {self.workers}.')
        if not 0 < self.epsilon < 1:
            _fail(f'epsilon must satisfy 0 < epsilon < 1, got {self.epsilon}.')
        if self.lo_trials < 1:
            _fail(f'lo_trials must be at least 1, got {self.lo_trials}.')
        PrimeField(self.prime)

        if self.experiment == DREGULAR_SINGULARITY:
            if self.d is None:
                _fail('The d-regular campaign needs a degree d.')
            if (self.n * self.d) % 2 or not 0 <= self.d < self.n:
                _fail(f'd-regular graphs need n * d even and 0 <= d < n, got d={self.d}, n={self.n}.')
        self._check_probability()

    def _check_probability(self):
        p = self.probability
        if p is None:
            if self.experiment in SAMPLED_EXPERIMENTS:
                _fail(f'The {self.experiment} campaign needs p or c.')
            return
        if not 0 < p < 1:
            _fail(f'Probability p must satisfy 0 < p < 1, got {p}.')
        if self.override_hypotheses:
            if p >= 0.5:
                LOGGER.warning(f'p={p} lies outside the theorem regime p < 1/2 (override given).')
            return
        if p >= 0.5:
            _fail(
                f'p={p} violates the hypothesis p < 1/2; pass --override-hypotheses to explore it.',
                HypothesisViolationError,
            )
        if self.experiment in (SATURATION, DEPENDENCY_CLASSIFICATION):
            floor = math.log(self.n) / (self.s * self.n)
            if p <= floor:
                _fail(
                    f'p={p} violates the hypothesis p > c ln n / n with c > 1/s = {1 / self.s}; '
                    'pass --override-hypotheses to explore it.',
                    HypothesisViolationError,
                )
        if self.experiment == NONSYMMETRIC_SINGULARITY:
            floor = (1 + self.epsilon) * math.log(self.n) / self.n
            if p <= floor:
                _fail(
                    f'p={p} violates the hypothesis p > (1 + epsilon) ln n / n = {floor}; '
                    'pass --override-hypotheses to explore it.',
                    HypothesisViolationError,
                )

    def to_dict(self):
        """Flat parameter echo that ``from_mapping`` accepts unchanged."""
        echo = asdict(self)
        echo['dimensions'] = ','.join(str(dimension) for dimension in self.dimensions)
        return {key: value for key, value in echo.items() if value is not None}

    @classmethod
    def from_mapping(cls, mapping, environ=None):
        unknown = sorted(set(mapping) - set(CONFIG_KEYS))
        if unknown:
            _fail(f'Unknown configuration keys: {", ".join(unknown)}.')
        for key, value in mapping.items():
            if isinstance(value, dict) or (isinstance(value, list) and key != 'dimensions'):
                _fail(f'Configuration key "{key}" must be a scalar; nested values are not supported.')
        if 'experiment' not in mapping:
            message = f'Configuration names no experiment, valid names: {", ".join(EXPERIMENT_NAMES)}.'
            LOGGER.critical(message)
            raise UsageError(message, EXPERIMENT_NAMES)
        for key in ('n', 'trials'):
            if key not in mapping:
                _fail(f'Configuration is missing the required key "{key}".')

        values = dict(mapping)
        values['seed'] = resolve_seed(values.get('seed'), environ)
        values['dimensions'] = _parse_dimensions(values.get('dimensions'))
        try:
            for key in ('n', 'trials', 's', 'weight_redraws', 'redraw_masks', 'workers', 'd', 'lo_trials', 'prime'):
                if values.get(key) is not None:
                    values[key] = int(values[key])
            for key in ('p', 'c', 'epsilon', 'rho'):
                if values.get(key) is not None:
                    values[key] = float(values[key])
        except (TypeError, ValueError) as error:
            _fail(f'Malformed configuration value: {error}.')
        values['override_hypotheses'] = bool(values.get('override_hypotheses', False))
        return cls(**values)


def load_config(path, environ=None):
    """Read a flat YAML/JSON configuration, or the parameters of a run manifest."""
    with open(path, 'r', encoding='utf-8') as handle:
        try:
            document = yaml.safe_load(handle)
        except yaml.YAMLError as error:
            mark = getattr(error, 'problem_mark', None)
            line_number = mark.line + 1 if mark is not None else None
            LOGGER.critical(f'Configuration {path} is not valid YAML: {error}')
            raise ParseError(f'{path} is not valid YAML', line_number)
    if not isinstance(document, dict):
        _fail(f'Configuration {path} must be a mapping.')
    if isinstance(document.get('parameters'), dict):
        document = document['parameters']
    return ExperimentConfig.from_mapping(document, environ)
