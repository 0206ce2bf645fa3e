"""The Q(W, p) model: weight patterns, Bernoulli masks and sparse matrices.

Matrix exchange format (UTF-8, newline separated, 0-indexed)::

    n q mode
    i j value
    ...

``q`` is 0 in rational mode. Symmetric matrices are written as their upper
triangle; a reader accepts either triangle and rejects conflicting mirrors.
"""
import logging
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Dict, Optional, Tuple

import numpy as np

from corank.errors import EmptyInputError, ParameterError, ParseError
from corank.field import PRIME_FIELD_MODE, PrimeField, parse_field_header
from corank.sampling import DIAGONAL_STREAM, MASK_STREAM, derive_seed, hash_entries, make_generator

LOGGER = logging.getLogger(__name__)

ZERO_DIAGONAL = 'zero'
NONZERO_DIAGONAL = 'nonzero'
MIXED_DIAGONAL = 'mixed'
DIAGONAL_MODES = (ZERO_DIAGONAL, NONZERO_DIAGONAL, MIXED_DIAGONAL)

_RATIONAL_WEIGHT_HALF_RANGE = 1 << 31


def _check_probability(p):
    if not 0 < p < 1:
        message = f'Probability p must satisfy 0 < p < 1, got {p}.'
        LOGGER.critical(message)
        raise ParameterError(message)


def _check_diagonal_mode(diagonal_mode):
    if diagonal_mode not in DIAGONAL_MODES:
        message = f'Unknown diagonal mode "{diagonal_mode}", expected one of {", ".join(DIAGONAL_MODES)}.'
        LOGGER.critical(message)
        raise ParameterError(message)


def _hashed_values(field, seed, rows, cols, n):
    """Map hashed cells to nonzero field values."""
    hashes = hash_entries(seed, rows, cols, n)
    if field.mode == PRIME_FIELD_MODE:
        if field.q - 1 < (1 << 64):
            return ((hashes % np.uint64(field.q - 1)) + np.uint64(1)).tolist()
        return [1 + int(value) % (field.q - 1) for value in hashes.tolist()]
    values = []
    for value in (hashes % np.uint64(1 << 32)).tolist():
        value -= _RATIONAL_WEIGHT_HALF_RANGE
        values.append(field.normalize(value + 1 if value >= 0 else value))
    return values


@dataclass(frozen=True)
class WeightMatrix:
    """A symmetric weight pattern W with nonzero off-diagonal entries.

    Generated matrices (``seed`` set) are never materialised: each entry is a
    hash of ``(seed, i, j)``. Explicit matrices keep their rows and are
    validated on construction.
    """

    n: int
    field: object
    diagonal_mode: str
    seed: Optional[int] = None
    explicit: Optional[Tuple[Tuple[object, ...], ...]] = None

    def __post_init__(self):
        if self.explicit is not None:
            self._validate_explicit()

    def _validate_explicit(self):
        rows = self.explicit
        if len(rows) != self.n or any(len(row) != self.n for row in rows):
            message = f'Weight matrix must be {self.n}x{self.n}.'
            LOGGER.critical(message)
            raise ParameterError(message)
        for i in range(self.n):
            for j in range(i + 1, self.n):
                if rows[i][j] != rows[j][i]:
                    message = f'Weight matrix is not symmetric at ({i}, {j}).'
                    LOGGER.critical(message)
                    raise ParameterError(message)
                if rows[i][j] == 0:
                    message = f'Off-diagonal weight w[{i}][{j}] must be nonzero.'
                    LOGGER.critical(message)
                    raise ParameterError(message)

    @classmethod
    def from_rows(cls, rows, field=None):
        field = field or PrimeField()
        normalized = tuple(tuple(field.normalize(value) for value in row) for row in rows)
        n = len(normalized)
        if n == 0:
            message = 'Weight matrix must have at least one row.'
            LOGGER.critical(message)
            raise EmptyInputError(message)
        diagonal = [normalized[i][i] if i < len(normalized[i]) else 0 for i in range(n)]
        if all(value == 0 for value in diagonal):
            diagonal_mode = ZERO_DIAGONAL
        elif all(value != 0 for value in diagonal):
            diagonal_mode = NONZERO_DIAGONAL
        else:
            diagonal_mode = MIXED_DIAGONAL
        return cls(n=n, field=field, diagonal_mode=diagonal_mode, explicit=normalized)

    @classmethod
    def from_matrix(cls, matrix):
        """Recover an explicit weight matrix from its exchange-format image."""
        rows = [[matrix.field.zero] * matrix.n for _ in range(matrix.n)]
        for i, j, value in matrix.nonzeros():
            rows[i][j] = value
            rows[j][i] = value
        return cls.from_rows(rows, matrix.field)

    def values(self, rows, cols):
        """Entries at cells ``(rows[k], cols[k])``, as plain field values."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if self.explicit is not None:
            return [self.explicit[i][j] for i, j in zip(rows.tolist(), cols.tolist())]

        low = np.minimum(rows, cols)
        high = np.maximum(rows, cols)
        result = _hashed_values(self.field, self.seed, low, high, self.n)
        on_diagonal = np.flatnonzero(low == high)
        if on_diagonal.size == 0 or self.diagonal_mode == NONZERO_DIAGONAL:
            return result
        if self.diagonal_mode == ZERO_DIAGONAL:
            for k in on_diagonal.tolist():
                result[k] = self.field.zero
            return result
        coin = hash_entries(derive_seed(self.seed, DIAGONAL_STREAM), low[on_diagonal], high[on_diagonal], self.n)
        for k, bit in zip(on_diagonal.tolist(), (coin >> np.uint64(63)).tolist()):
            if bit == 0:
                result[k] = self.field.zero
        return result

    def entry(self, i, j):
        return self.values([i], [j])[0]

    def to_rows(self):
        if self.explicit is not None:
            return [list(row) for row in self.explicit]
        rows, cols = np.triu_indices(self.n)
        dense = [[self.field.zero] * self.n for _ in range(self.n)]
        for i, j, value in zip(rows.tolist(), cols.tolist(), self.values(rows, cols)):
            dense[i][j] = value
            dense[j][i] = value
        return dense

    def as_matrix(self):
        rows, cols = np.triu_indices(self.n)
        values = self.values(rows, cols)
        entries = {(i, j): value for i, j, value in zip(rows.tolist(), cols.tolist(), values) if value != 0}
        return SparseSymMatrix(self.n, self.field, entries)


def random_weights(n, diagonal_mode=ZERO_DIAGONAL, seed=0, field=None):
    """Random symmetric weights: uniform nonzero field elements off the diagonal."""
    if n < 1:
        message = f'Weight matrix needs n >= 1, got {n}.'
        LOGGER.critical(message)
        raise EmptyInputError(message)
    _check_diagonal_mode(diagonal_mode)
    return WeightMatrix(n=n, field=field or PrimeField(), diagonal_mode=diagonal_mode, seed=int(seed))


def with_zero_diagonal(weights):
    """W with every diagonal weight replaced by 0."""
    if weights.explicit is None:
        return replace(weights, diagonal_mode=ZERO_DIAGONAL)
    rows = [list(row) for row in weights.explicit]
    for i in range(weights.n):
        rows[i][i] = weights.field.zero
    return WeightMatrix.from_rows(rows, weights.field)


@dataclass(frozen=True)
class BernoulliMask:
    """Positions where the independent indicator xi equals 1.

    Symmetric masks list upper-triangular cells ``i <= j``; general masks list
    every cell of the n x n grid.
    """

    n: int
    p: float
    seed: int
    pairs: Tuple[Tuple[int, int], ...]
    symmetric: bool = True

    @cached_property
    def _pair_set(self):
        return frozenset(self.pairs)

    def xi(self, i, j):
        if self.symmetric and i > j:
            i, j = j, i
        return int((i, j) in self._pair_set)

    def cell_count(self):
        return self.n * (self.n + 1) // 2 if self.symmetric else self.n * self.n

    def as_matrix(self, field=None):
        field = field or PrimeField()
        entries = {pair: field.one for pair in self.pairs}
        if self.symmetric:
            return SparseSymMatrix(self.n, field, entries)
        return SparseMatrix(self.n, field, entries)

    @classmethod
    def from_matrix(cls, matrix, p=0.0, seed=0):
        pairs = tuple(sorted((i, j) for i, j, _ in matrix.nonzeros()))
        return cls(matrix.n, p, seed, pairs, symmetric=isinstance(matrix, SparseSymMatrix))


def _sample_cells(cell_count, p, seed):
    generator = make_generator(seed, MASK_STREAM)
    count = int(generator.binomial(cell_count, p))
    if count == 0:
        return np.zeros(0, dtype=np.int64)
    # Conditioned on its size, an iid Bernoulli support is a uniform subset
    cells = generator.choice(cell_count, size=count, replace=False, shuffle=False)
    return np.sort(np.asarray(cells, dtype=np.int64))


def bernoulli_mask(n, p, seed):
    """One independent Bernoulli(p) indicator per unordered pair and per diagonal cell."""
    _check_probability(p)
    cells = _sample_cells(n * (n + 1) // 2, p, seed)
    starts = np.arange(n, dtype=np.int64) * n - np.arange(n, dtype=np.int64) * (np.arange(n, dtype=np.int64) - 1) // 2
    rows = np.searchsorted(starts, cells, side='right') - 1
    cols = rows + (cells - starts[rows])
    return BernoulliMask(n, p, int(seed), tuple(zip(rows.tolist(), cols.tolist())))


def general_mask(n, p, seed):
    """One independent Bernoulli(p) indicator per cell of the full n x n grid."""
    _check_probability(p)
    cells = _sample_cells(n * n, p, seed)
    return BernoulliMask(n, p, int(seed), tuple(zip((cells // n).tolist(), (cells % n).tolist())), symmetric=False)


@dataclass(frozen=True)
class SparseSymMatrix:
    """Symmetric sparse matrix stored as its nonzero upper triangle ``{(i, j): value}`` with ``i <= j``."""

    n: int
    field: object
    entries: Dict[Tuple[int, int], object]

    def entry(self, i, j):
        if i > j:
            i, j = j, i
        return self.entries.get((i, j), self.field.zero)

    def nonzeros(self):
        return [(i, j, self.entries[(i, j)]) for i, j in sorted(self.entries)]

    @property
    def nnz(self):
        return len(self.entries)

    def rows(self):
        """Fresh ``[{column: value}]`` row view of the full symmetric matrix."""
        rows = [dict() for _ in range(self.n)]
        for (i, j), value in self.entries.items():
            rows[i][j] = value
            rows[j][i] = value
        return rows

    def zero_rows(self):
        touched = set()
        for i, j in self.entries:
            touched.add(i)
            touched.add(j)
        return [i for i in range(self.n) if i not in touched]

    @classmethod
    def from_dense(cls, rows, field=None):
        field = field or PrimeField()
        n = len(rows)
        entries = {}
        for i in range(n):
            if len(rows[i]) != n:
                message = f'Row {i} has {len(rows[i])} entries, expected {n}.'
                LOGGER.critical(message)
                raise ParameterError(message)
            for j in range(i, n):
                value = field.normalize(rows[i][j])
                if value != field.normalize(rows[j][i]):
                    message = f'Matrix is not symmetric at ({i}, {j}).'
                    LOGGER.critical(message)
                    raise ParameterError(message)
                if value != 0:
                    entries[(i, j)] = value
        return cls(n, field, entries)

    def to_dense(self):
        dense = [[self.field.zero] * self.n for _ in range(self.n)]
        for (i, j), value in self.entries.items():
            dense[i][j] = value
            dense[j][i] = value
        return dense


@dataclass(frozen=True)
class SparseMatrix:
    """General square sparse matrix ``{(i, j): value}``."""

    n: int
    field: object
    entries: Dict[Tuple[int, int], object]

    def entry(self, i, j):
        return self.entries.get((i, j), self.field.zero)

    def nonzeros(self):
        return [(i, j, self.entries[(i, j)]) for i, j in sorted(self.entries)]

    @property
    def nnz(self):
        return len(self.entries)

    def rows(self):
        rows = [dict() for _ in range(self.n)]
        for (i, j), value in self.entries.items():
            rows[i][j] = value
        return rows

    def zero_rows(self):
        touched = {i for i, _ in self.entries}
        return [i for i in range(self.n) if i not in touched]

    def zero_columns(self):
        touched = {j for _, j in self.entries}
        return [j for j in range(self.n) if j not in touched]

    @classmethod
    def from_dense(cls, rows, field=None):
        field = field or PrimeField()
        entries = {}
        for i, row in enumerate(rows):
            for j, value in enumerate(row):
                value = field.normalize(value)
                if value != 0:
                    entries[(i, j)] = value
        return cls(len(rows), field, entries)

    def to_dense(self):
        dense = [[self.field.zero] * self.n for _ in range(self.n)]
        for (i, j), value in self.entries.items():
            dense[i][j] = value
        return dense


def apply_mask(weights, mask):
    """Q with q_ij = w_ij * xi_ij on the cells of ``mask``."""
    if mask.n != weights.n:
        message = f'Mask has n={mask.n} but weights have n={weights.n}.'
        LOGGER.critical(message)
        raise ParameterError(message)
    if not mask.pairs:
        values = []
    else:
        cells = np.asarray(mask.pairs, dtype=np.int64)
        values = weights.values(cells[:, 0], cells[:, 1])
    entries = {pair: value for pair, value in zip(mask.pairs, values) if value != 0}
    if mask.symmetric:
        return SparseSymMatrix(weights.n, weights.field, entries)
    return SparseMatrix(weights.n, weights.field, entries)


def sparsify(weights, p, seed):
    """Sample Q(W, p): keep each cell on or above the diagonal independently with probability p."""
    _check_probability(p)
    return apply_mask(weights, bernoulli_mask(weights.n, p, seed))


def sparsify_general(n, p, seed, weight_seed, field=None, diagonal_mode=NONZERO_DIAGONAL):
    """A(W, p) for a non-symmetric W: every one of the n^2 cells is kept independently."""
    if n < 1:
        message = f'Matrix needs n >= 1, got {n}.'
        LOGGER.critical(message)
        raise EmptyInputError(message)
    _check_diagonal_mode(diagonal_mode)
    field = field or PrimeField()
    mask = general_mask(n, p, seed)
    if not mask.pairs:
        return SparseMatrix(n, field, {})
    cells = np.asarray(mask.pairs, dtype=np.int64)
    # Ordered cells hash independently, so w_ij and w_ji are unrelated
    values = _hashed_values(field, weight_seed, cells[:, 0], cells[:, 1], n)
    entries = {}
    for (i, j), value in zip(mask.pairs, values):
        if i == j and diagonal_mode == ZERO_DIAGONAL:
            continue
        entries[(i, j)] = value
    return SparseMatrix(n, field, entries)


def minor(matrix, m):
    """The upper-left m x m minor."""
    if not 1 <= m <= matrix.n:
        message = f'Minor size m must satisfy 1 <= m <= {matrix.n}, got {m}.'
        LOGGER.critical(message)
        raise ParameterError(message)
    entries = {(i, j): value for (i, j), value in matrix.entries.items() if i < m and j < m}
    return type(matrix)(m, matrix.field, entries)


def format_matrix(matrix):
    lines = [f'{matrix.n} {matrix.field.q} {matrix.field.mode}']
    for i, j, value in matrix.nonzeros():
        lines.append(f'{i} {j} {matrix.field.format_value(value)}')
    return '\n'.join(lines) + '\n'


def parse_matrix(text, symmetric=True):
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError('missing header "n q mode"', 1)
    header = lines[0].split()
    if len(header) != 3:
        raise ParseError('expected header "n q mode"', 1)
    try:
        n = int(header[0])
    except ValueError:
        raise ParseError(f'invalid size "{header[0]}"', 1)
    if n < 1:
        raise ParseError(f'matrix size must be positive, got {n}', 1)
    field = parse_field_header(header[1:], 1)

    cells = {}
    for line_number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        tokens = line.split()
        if len(tokens) != 3:
            raise ParseError('expected "i j value"', line_number)
        try:
            i, j = int(tokens[0]), int(tokens[1])
            value = field.parse_value(tokens[2])
        except (ValueError, ZeroDivisionError, ParameterError):
            raise ParseError(f'cannot parse entry "{line.strip()}"', line_number)
        if not (0 <= i < n and 0 <= j < n):
            raise ParseError(f'index ({i}, {j}) outside 0..{n - 1}', line_number)
        if (i, j) in cells and cells[(i, j)][0] != value:
            raise ParseError(f'entry ({i}, {j}) given twice with different values', line_number)
        cells[(i, j)] = (value, line_number)

    if not symmetric:
        return SparseMatrix(n, field, {cell: value for cell, (value, _) in cells.items() if value != 0})

    entries = {}
    for (i, j), (value, line_number) in sorted(cells.items()):
        mirror = cells.get((j, i))
        if mirror is not None and mirror[0] != value:
            raise ParseError(f'symmetry violation between ({i}, {j}) and ({j}, {i})', max(line_number, mirror[1]))
        if value != 0:
            entries[(min(i, j), max(i, j))] = value
    return SparseSymMatrix(n, field, entries)


def write_matrix(matrix, path):
    with open(path, 'w', encoding='utf-8', newline='\n') as handle:
        handle.write(format_matrix(matrix))


def read_matrix(path, symmetric=True):
    with open(path, 'r', encoding='utf-8') as handle:
        return parse_matrix(handle.read(), symmetric=symmetric)
