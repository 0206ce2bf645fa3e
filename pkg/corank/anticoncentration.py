"""Littlewood-Offord estimators for random linear and quadratic forms.

The variables are independent 0/1 indicators with ``P(1) = rho``; a linear
form is ``sum v_i z_i`` and a quadratic form ``sum a_ij z_i z_j``. Monte
Carlo trials run in fixed-size chunks, each with its own derived generator,
so an estimate depends only on ``(inputs, trials, seed)``.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from corank.constants import BRUTE_FORCE_CAP, DEFAULT_LO_TRIALS, LO_CHUNK_SIZE
from corank.errors import CapacityError, EmptyInputError, ParameterError
from corank.field import PrimeField
from corank.rank import determinant
from corank.sampling import make_generator

LOGGER = logging.getLogger(__name__)

LINEAR_FORM = 'linear'
QUADRATIC_FORM = 'quadratic'

_LIMB_BITS = 31
_LIMB_MASK = (1 << _LIMB_BITS) - 1


@dataclass(frozen=True)
class LOEstimate:
    form: str
    hits: int
    trials: int
    rho: float
    dimension: int
    bound_value: float

    @property
    def hit_probability(self):
        return self.hits / self.trials

    @property
    def std_error(self):
        p_hat = self.hit_probability
        return math.sqrt(p_hat * (1 - p_hat) / self.trials)

    @property
    def scaled(self):
        """Estimate divided by its envelope."""
        return self.hit_probability / self.bound_value

    def to_dict(self):
        return {
            'form': self.form,
            'hits': self.hits,
            'trials': self.trials,
            'rho': self.rho,
            'dimension': self.dimension,
            'hit_probability': self.hit_probability,
            'std_error': self.std_error,
            'bound_value': self.bound_value,
        }


def _check_rho(rho):
    if not 0 < rho <= 0.5:
        message = f'rho must satisfy 0 < rho <= 1/2, got {rho}.'
        LOGGER.critical(message)
        raise ParameterError(message)


def _check_trials(trials):
    if trials < 1:
        message = f'At least one trial is required, got {trials}.'
        LOGGER.critical(message)
        raise ParameterError(message)


def _split_limbs(values):
    """Split nonnegative integers below 2^62 into int64 (high, low) 31-bit limbs."""
    values = [int(value) for value in values]
    high = np.array([value >> _LIMB_BITS for value in values], dtype=np.int64)
    low = np.array([value & _LIMB_MASK for value in values], dtype=np.int64)
    return high, low


def _combine_limbs(high, low, q):
    shift = (1 << _LIMB_BITS) % q
    return [(int(h) % q * shift + int(l)) % q for h, l in zip(high.tolist(), low.tolist())]


def _linear_values(indicators, coefficients, field):
    """Per-row value of ``indicators @ coefficients`` over the field."""
    if isinstance(field, PrimeField) and field.q < (1 << 62):
        high, low = _split_limbs(list(coefficients))
        return _combine_limbs(indicators @ high, indicators @ low, field.q)
    exact = np.array(list(coefficients), dtype=object)
    return list(indicators.astype(object) @ exact)


def _quadratic_values(indicators, grid, field):
    """Per-row value of ``z^T A z`` over the field."""
    size = len(grid)
    if isinstance(field, PrimeField) and field.q < (1 << 62):
        high, low = _split_limbs([value for row in grid for value in row])
        high = high.reshape(size, size)
        low = low.reshape(size, size)
        return _combine_limbs(
            np.einsum('ti,ij,tj->t', indicators, high, indicators),
            np.einsum('ti,ij,tj->t', indicators, low, indicators),
            field.q,
        )
    exact = np.array([list(row) for row in grid], dtype=object)
    as_objects = indicators.astype(object)
    return list(((as_objects @ exact) * as_objects).sum(axis=1))


def _count_zero_hits(evaluate, dimension, rho, trials, seed):
    hits = 0
    chunks = math.ceil(trials / LO_CHUNK_SIZE)
    for chunk in range(chunks):
        size = min(LO_CHUNK_SIZE, trials - chunk * LO_CHUNK_SIZE)
        generator = make_generator(seed, chunk)
        indicators = (generator.random((size, dimension)) < rho).astype(np.int64)
        hits += sum(1 for value in evaluate(indicators) if value == 0)
    return hits


def estimate_linear_lo(coefficients, rho, trials=DEFAULT_LO_TRIALS, seed=0, field=None):
    """Monte Carlo estimate of ``P(sum v_i z_i = 0)`` with envelope ``(D rho)^(-1/2)``."""
    field = field or PrimeField()
    coefficients = [field.normalize(value) for value in coefficients]
    if not coefficients:
        message = 'The coefficient sequence is empty.'
        LOGGER.critical(message)
        raise EmptyInputError(message)
    if any(value == 0 for value in coefficients):
        message = 'Every coefficient of a linear form must be nonzero.'
        LOGGER.critical(message)
        raise ParameterError(message)
    _check_rho(rho)
    _check_trials(trials)

    dimension = len(coefficients)
    hits = _count_zero_hits(
        lambda indicators: _linear_values(indicators, coefficients, field), dimension, rho, trials, seed
    )
    LOGGER.debug(f'Linear form D={dimension}, rho={rho}: {hits} zero hits in {trials} trials')
    return LOEstimate(LINEAR_FORM, hits, trials, rho, dimension, (dimension * rho) ** -0.5)


def quadratic_q_parameter(grid):
    """Largest q such that at least q columns each have at least q nonzero rows."""
    size = len(grid)
    column_counts = sorted(
        (sum(1 for i in range(size) if grid[i][j] != 0) for j in range(size)),
        reverse=True,
    )
    q = 0
    for rank, count in enumerate(column_counts, start=1):
        if count >= rank:
            q = rank
        else:
            break
    return q


def estimate_quadratic_lo(grid, rho, trials=DEFAULT_LO_TRIALS, seed=0, field=None):
    """Monte Carlo estimate of ``P(sum a_ij z_i z_j = 0)`` with envelope ``(q rho)^(-1/4)``."""
    field = field or PrimeField()
    grid = [[field.normalize(value) for value in row] for row in grid]
    if not grid:
        message = 'The coefficient grid is empty.'
        LOGGER.critical(message)
        raise EmptyInputError(message)
    q = quadratic_q_parameter(grid)
    if q == 0:
        message = 'The coefficient grid is identically zero, so its q-parameter is undefined.'
        LOGGER.critical(message)
        raise ParameterError(message)
    _check_rho(rho)
    _check_trials(trials)

    hits = _count_zero_hits(lambda indicators: _quadratic_values(indicators, grid, field), len(grid), rho, trials, seed)
    LOGGER.debug(f'Quadratic form n={len(grid)}, q={q}, rho={rho}: {hits} zero hits in {trials} trials')
    return LOEstimate(QUADRATIC_FORM, hits, trials, rho, q, (q * rho) ** -0.25)


def exact_linear_hit_probability(coefficients, rho, field=None):
    """``P(sum v_i z_i = 0)`` by convolving the distribution of partial sums."""
    field = field or PrimeField()
    distribution = {field.zero: 1.0}
    for value in coefficients:
        value = field.normalize(value)
        step = {}
        for partial, probability in distribution.items():
            step[partial] = step.get(partial, 0.0) + probability * (1 - rho)
            shifted = field.add(partial, value)
            step[shifted] = step.get(shifted, 0.0) + probability * rho
        distribution = step
    return distribution.get(field.zero, 0.0)


def exact_quadratic_hit_probability(grid, rho, field=None):
    """``P(z^T A z = 0)`` by enumerating all 2^D outcomes."""
    field = field or PrimeField()
    grid = [[field.normalize(value) for value in row] for row in grid]
    size = len(grid)
    if size > BRUTE_FORCE_CAP:
        message = f'Outcome enumeration is capped at D={BRUTE_FORCE_CAP}, got D={size}.'
        LOGGER.critical(message)
        raise CapacityError(message)
    outcomes = np.arange(1 << size, dtype=np.int64)
    indicators = ((outcomes[:, None] >> np.arange(size, dtype=np.int64)) & 1).astype(np.int64)
    ones = indicators.sum(axis=1)
    weights = rho ** ones * (1 - rho) ** (size - ones)
    values = _quadratic_values(indicators, grid, field)
    return float(sum(weight for weight, value in zip(weights.tolist(), values) if value == 0))


def cofactor_grid(matrix):
    """The adjugate of Q.

    Bordering Q with a new row and column x and corner d gives
    ``det = d det(Q) - x^T adj(Q) x``, so this grid drives one-vertex augmentation.
    """
    if matrix.n > BRUTE_FORCE_CAP:
        message = f'Cofactor grids are capped at n={BRUTE_FORCE_CAP}, got n={matrix.n}.'
        LOGGER.critical(message)
        raise CapacityError(message)
    field = matrix.field
    dense = matrix.to_dense()
    size = matrix.n
    grid = [[field.zero] * size for _ in range(size)]
    for i in range(size):
        for j in range(size):
            minor_rows = [row[:i] + row[i + 1:] for k, row in enumerate(dense) if k != j]
            cofactor = determinant(minor_rows, field) if minor_rows else field.one
            grid[i][j] = cofactor if (i + j) % 2 == 0 else field.neg(cofactor)
    return grid
