"""Exact rank.

``exact_rank`` runs sparse Gaussian elimination over the matrix's own field
with a Markowitz-style pivot rule: the active row with the fewest entries,
then its column with the fewest entries, lowest index on ties. Once the
active block fills in, it is finished by a dense numpy kernel chosen by the
modulus:

* primes below 2^23: blocked elimination in float64, trailing updates are
  BLAS matrix products whose partial sums stay below 2^53
* primes below 2^31: int64 row updates
* the Mersenne prime 2^61 - 1: uint64 row updates with limb-split products

Rational matrices and other moduli stay sparse to the end.
"""
import heapq
import logging
from fractions import Fraction
from math import lcm

import numpy as np

from corank.constants import DEFAULT_ORACLE_CAP, DEFAULT_PRIME, DENSE_BLOCK_SIZE, DENSE_SWITCH_DENSITY
from corank.constants import DENSE_SWITCH_MIN_ORDER
from corank.errors import CapacityError
from corank.field import PrimeField

LOGGER = logging.getLogger(__name__)

BLOCKED_KERNEL = 'blocked-float64'
INT64_KERNEL = 'int64'
MERSENNE_KERNEL = 'mersenne61'

_M61 = np.uint64(DEFAULT_PRIME)
_LOW32 = np.uint64(0xFFFFFFFF)
_LOW29 = np.uint64((1 << 29) - 1)


def dense_kernel_for(field):
    """Name of the dense kernel able to finish elimination over ``field``, or None."""
    if not isinstance(field, PrimeField):
        return None
    q = field.q
    if (q - 1) ** 2 * DENSE_BLOCK_SIZE < (1 << 53):
        return BLOCKED_KERNEL
    if q < (1 << 31):
        return INT64_KERNEL
    if q == DEFAULT_PRIME:
        return MERSENNE_KERNEL
    return None


def _reduce61(x):
    x = (x & _M61) + (x >> np.uint64(61))
    return np.where(x >= _M61, x - _M61, x)


def _mulmod61(a, b):
    """a * b mod 2^61 - 1 for uint64 operands below the modulus."""
    a_high, a_low = a >> np.uint64(32), a & _LOW32
    b_high, b_low = b >> np.uint64(32), b & _LOW32
    middle = a_high * b_low + a_low * b_high
    low = a_low * b_low
    total = (
        ((a_high * b_high) << np.uint64(3))
        + (middle >> np.uint64(29))
        + ((middle & _LOW29) << np.uint64(32))
        + (low & _M61)
        + (low >> np.uint64(61))
    )
    return _reduce61(total)


def _submod61(a, b):
    return np.where(a >= b, a - b, a + _M61 - b)


def _dense_rank_unblocked(a, mulmod, submod, q):
    rows, cols = a.shape
    top = 0
    for c in range(cols):
        if top == rows:
            break
        candidates = np.flatnonzero(a[top:, c])
        if candidates.size == 0:
            continue
        pivot = top + int(candidates[0])
        if pivot != top:
            # Columns left of c are already zero in every unfinished row
            a[[top, pivot], c:] = a[[pivot, top], c:]
        inverse = a.dtype.type(pow(int(a[top, c]), -1, q))
        below = top + 1 + np.flatnonzero(a[top + 1:, c])
        if below.size:
            factors = mulmod(a[below, c], inverse)
            a[np.ix_(below, np.arange(c, cols))] = submod(
                a[below, c:], mulmod(factors[:, None], a[top, c:][None, :])
            )
        top += 1
    return top


def _dense_rank_blocked(a, q, block):
    rows, cols = a.shape
    top = 0
    for c0 in range(0, cols, block):
        if top == rows:
            break
        c1 = min(c0 + block, cols)
        start = top
        multipliers = np.zeros((rows, c1 - c0))
        k = 0
        for c in range(c0, c1):
            if top == rows:
                break
            candidates = np.flatnonzero(a[top:, c])
            if candidates.size == 0:
                continue
            pivot = top + int(candidates[0])
            if pivot != top:
                a[[top, pivot]] = a[[pivot, top]]
                multipliers[[top, pivot]] = multipliers[[pivot, top]]
            inverse = float(pow(int(a[top, c]), -1, q))
            below = top + 1 + np.flatnonzero(a[top + 1:, c])
            if below.size:
                factors = np.fmod(a[below, c] * inverse, q)
                multipliers[below, k] = factors
                a[below, c:c1] = np.mod(a[below, c:c1] - np.fmod(np.outer(factors, a[top, c:c1]), q), q)
            top += 1
            k += 1
        if k == 0 or c1 == cols:
            continue
        # Pivot rows of this panel still hold trailing values from before the panel
        pivots = a[start:top, c1:]
        for t in range(1, k):
            coefficients = multipliers[start + t, :t]
            if coefficients.any():
                pivots[t] = np.mod(pivots[t] - np.fmod(coefficients @ pivots[:t], q), q)
        if top < rows:
            a[top:, c1:] = np.mod(a[top:, c1:] - np.fmod(multipliers[top:, :k] @ pivots, q), q)
    return top


def dense_rank_mod(dense, q, kernel=None):
    """Rank over GF(q) of a dense integer array with entries in ``[0, q)``."""
    kernel = kernel or dense_kernel_for(PrimeField(q))
    if kernel == BLOCKED_KERNEL:
        block = max(1, min(DENSE_BLOCK_SIZE, ((1 << 53) - 1) // max(1, (q - 1) ** 2)))
        return _dense_rank_blocked(np.array(dense, dtype=np.float64), q, block)
    if kernel == INT64_KERNEL:
        q64 = np.int64(q)
        return _dense_rank_unblocked(
            np.array(dense, dtype=np.int64),
            lambda x, y: (x * y) % q64,
            lambda x, y: (x - y) % q64,
            q,
        )
    if kernel == MERSENNE_KERNEL:
        return _dense_rank_unblocked(np.array(dense, dtype=np.uint64), _mulmod61, _submod61, q)
    raise ValueError(f'no dense kernel for modulus {q}')


def _finish_dense(active, columns, field, kernel):
    row_ids = sorted(active)
    col_ids = sorted(columns)
    col_index = {c: k for k, c in enumerate(col_ids)}
    dense = np.zeros((len(row_ids), len(col_ids)), dtype=object)
    for k, r in enumerate(row_ids):
        for c, value in active[r].items():
            dense[k, col_index[c]] = value
    LOGGER.debug(f'Dense {kernel} kernel takes over a {len(row_ids)}x{len(col_ids)} block')
    return dense_rank_mod(dense.tolist(), field.q, kernel)


def _markowitz_rank(rows, field):
    active = {r: row for r, row in enumerate(rows) if row}
    columns = {}
    for r, row in active.items():
        for c in row:
            columns.setdefault(c, set()).add(r)
    nnz = sum(len(row) for row in active.values())
    heap = [(len(row), r) for r, row in active.items()]
    heapq.heapify(heap)
    kernel = dense_kernel_for(field)
    rank = 0

    while active:
        order = len(active)
        if kernel and order >= DENSE_SWITCH_MIN_ORDER and nnz > DENSE_SWITCH_DENSITY * order * len(columns):
            return rank + _finish_dense(active, columns, field, kernel)

        length, r = heapq.heappop(heap)
        row = active.get(r)
        if row is None or len(row) != length:
            continue
        c = min(row, key=lambda col: (len(columns[col]), col))
        pivot_inverse = field.inv(row[c])
        del active[r]
        nnz -= len(row)
        for col in row:
            members = columns[col]
            members.discard(r)
            if not members and col != c:
                del columns[col]

        for other in sorted(columns.pop(c, ())):
            target = active[other]
            factor = field.mul(target[c], pivot_inverse)
            for col, value in row.items():
                old = target.get(col)
                if old is None:
                    target[col] = field.neg(field.mul(factor, value))
                    columns.setdefault(col, set()).add(other)
                    nnz += 1
                    continue
                new = field.sub(old, field.mul(factor, value))
                if new == 0:
                    del target[col]
                    nnz -= 1
                    if col != c:
                        members = columns[col]
                        members.discard(other)
                        if not members:
                            del columns[col]
                else:
                    target[col] = new
            if target:
                heapq.heappush(heap, (len(target), other))
            else:
                del active[other]
        rank += 1
    return rank


def exact_rank(matrix):
    """Exact rank of a sparse matrix over its own coefficient field; the input is not modified."""
    return _markowitz_rank(matrix.rows(), matrix.field)


def rank_of_rows(rows, field):
    """Exact rank of ``[{column: value}]`` rows; the rows are consumed."""
    return _markowitz_rank(rows, field)


def _integer_rows(matrix):
    dense = matrix.to_dense()
    if isinstance(matrix.field, PrimeField):
        return [[int(value) for value in row] for row in dense]
    rows = []
    for row in dense:
        scale = lcm(*(Fraction(value).denominator for value in row)) if row else 1
        rows.append([int(Fraction(value) * scale) for value in row])
    return rows


def bareiss_rank(rows):
    """Rank of an integer matrix by fraction-free elimination; ``rows`` is modified in place."""
    if not rows:
        return 0
    height, width = len(rows), len(rows[0])
    rank = 0
    previous = 1
    for c in range(width):
        pivot = next((r for r in range(rank, height) if rows[r][c] != 0), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        pivot_value = rows[rank][c]
        pivot_row = rows[rank]
        for r in range(rank + 1, height):
            row = rows[r]
            leading = row[c]
            for j in range(c + 1, width):
                row[j] = (row[j] * pivot_value - leading * pivot_row[j]) // previous
            row[c] = 0
        previous = pivot_value
        rank += 1
        if rank == height:
            break
    return rank


def rank_rational_oracle(matrix, cap=DEFAULT_ORACLE_CAP):
    """Rank over the rationals of the matrix's integer (or rational) entries, by Bareiss elimination.

    Prime-field entries are read as the integers they represent.
    """
    if matrix.n > cap:
        message = f'Rational oracle is capped at n={cap}, got n={matrix.n}.'
        LOGGER.critical(message)
        raise CapacityError(message)
    return bareiss_rank(_integer_rows(matrix))


def null_space(dense, field):
    """Basis of ``{x : dense x = 0}`` as a list of vectors, from the reduced row echelon form."""
    matrix = [list(row) for row in dense]
    height = len(matrix)
    width = len(matrix[0]) if height else 0
    pivot_columns = []
    r = 0
    for c in range(width):
        if r == height:
            break
        pivot = next((i for i in range(r, height) if matrix[i][c] != 0), None)
        if pivot is None:
            continue
        matrix[r], matrix[pivot] = matrix[pivot], matrix[r]
        inverse = field.inv(matrix[r][c])
        matrix[r] = [field.mul(value, inverse) for value in matrix[r]]
        for i in range(height):
            if i != r and matrix[i][c] != 0:
                factor = matrix[i][c]
                matrix[i] = [field.sub(a, field.mul(factor, b)) for a, b in zip(matrix[i], matrix[r])]
        pivot_columns.append(c)
        r += 1

    pivot_set = set(pivot_columns)
    basis = []
    for free in range(width):
        if free in pivot_set:
            continue
        vector = [field.zero] * width
        vector[free] = field.one
        for i, c in enumerate(pivot_columns):
            vector[c] = field.neg(matrix[i][free])
        basis.append(vector)
    return basis


def left_null_space(matrix):
    """Basis of the row dependencies ``{a : sum_i a_i row_i = 0}`` of a sparse matrix."""
    dense = matrix.to_dense()
    transposed = [list(column) for column in zip(*dense)]
    return null_space(transposed, matrix.field)


def determinant(dense, field):
    matrix = [list(row) for row in dense]
    size = len(matrix)
    result = field.one
    for c in range(size):
        pivot = next((i for i in range(c, size) if matrix[i][c] != 0), None)
        if pivot is None:
            return field.zero
        if pivot != c:
            matrix[c], matrix[pivot] = matrix[pivot], matrix[c]
            result = field.neg(result)
        result = field.mul(result, matrix[c][c])
        inverse = field.inv(matrix[c][c])
        for i in range(c + 1, size):
            if matrix[i][c] != 0:
                factor = field.mul(matrix[i][c], inverse)
                matrix[i] = [field.sub(a, field.mul(factor, b)) for a, b in zip(matrix[i], matrix[c])]
    return result
