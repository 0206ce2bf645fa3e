import math
from fractions import Fraction

import pytest

from corank.anticoncentration import (
    LINEAR_FORM,
    LOEstimate,
    cofactor_grid,
    estimate_linear_lo,
    estimate_quadratic_lo,
    exact_linear_hit_probability,
    exact_quadratic_hit_probability,
    quadratic_q_parameter,
)
from corank.constants import LO_CHUNK_SIZE
from corank.errors import CapacityError, EmptyInputError, ParameterError
from corank.field import RationalField
from corank.matrix import SparseSymMatrix
from corank.rank import determinant


def _within(estimate, exact, std_errors=5):
    spread = math.sqrt(exact * (1 - exact) / estimate.trials)
    return abs(estimate.hit_probability - exact) <= std_errors * spread + 1 / estimate.trials


def test_lo_estimate_properties():
    estimate = LOEstimate(LINEAR_FORM, 25, 100, 0.5, 4, 0.5)

    assert estimate.hit_probability == 0.25
    assert estimate.std_error == pytest.approx(math.sqrt(0.25 * 0.75 / 100))
    assert estimate.scaled == 0.5
    assert estimate.to_dict()['hits'] == 25


def test_estimate_linear_lo_matches_exact():
    coefficients = [1, -1] * 5
    estimate = estimate_linear_lo(coefficients, 0.3, trials=20000, seed=1)

    assert estimate.dimension == 10
    assert estimate.bound_value == pytest.approx((10 * 0.3) ** -0.5)
    assert _within(estimate, exact_linear_hit_probability(coefficients, 0.3))


def test_estimate_linear_lo_is_reproducible():
    first = estimate_linear_lo([1, 2, -3, 1], 0.5, trials=LO_CHUNK_SIZE + 17, seed=5)
    second = estimate_linear_lo([1, 2, -3, 1], 0.5, trials=LO_CHUNK_SIZE + 17, seed=5)

    assert first == second
    assert first.trials == LO_CHUNK_SIZE + 17


def test_estimate_linear_lo_rational_field():
    estimate = estimate_linear_lo([1, -1], 0.5, trials=4000, seed=2, field=RationalField())

    assert _within(estimate, 0.5)


@pytest.mark.parametrize(
    'coefficients, rho, trials, error',
    [
        ([], 0.5, 10, EmptyInputError),
        ([1, 0], 0.5, 10, ParameterError),
        ([1], 0, 10, ParameterError),
        ([1], 0.6, 10, ParameterError),
        ([1], 0.5, 0, ParameterError),
    ],
)
def test_estimate_linear_lo_validation(coefficients, rho, trials, error):
    with pytest.raises(error):
        estimate_linear_lo(coefficients, rho, trials=trials)


def test_exact_linear_hit_probability():
    assert exact_linear_hit_probability([1, -1], 0.5) == pytest.approx(0.5)
    assert exact_linear_hit_probability([1], 0.5) == pytest.approx(0.5)
    assert exact_linear_hit_probability([1, 1], 0.25) == pytest.approx(0.75 ** 2)
    assert exact_linear_hit_probability([], 0.25) == 1.0


def test_quadratic_q_parameter():
    identity = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]

    assert quadratic_q_parameter(identity) == 1
    assert quadratic_q_parameter([[1] * 3 for _ in range(3)]) == 3
    assert quadratic_q_parameter([[0] * 3 for _ in range(3)]) == 0


def test_exact_quadratic_hit_probability():
    assert exact_quadratic_hit_probability([[1, 0], [0, 1]], 0.5) == pytest.approx(0.25)
    assert exact_quadratic_hit_probability([[1, 0], [0, 1]], 0.5, field=RationalField()) == pytest.approx(0.25)
    # z1 z2 - z1 z2 vanishes everywhere
    assert exact_quadratic_hit_probability([[0, 1], [-1, 0]], 0.3) == pytest.approx(1.0)


def test_exact_quadratic_hit_probability_cap():
    with pytest.raises(CapacityError):
        exact_quadratic_hit_probability([[1] * 23 for _ in range(23)], 0.5)


def test_estimate_quadratic_lo_matches_exact():
    grid = [[1, 2, 0, 1], [2, 0, 1, 0], [0, 1, 3, -1], [1, 0, -1, 2]]
    estimate = estimate_quadratic_lo(grid, 0.4, trials=20000, seed=3)

    assert estimate.dimension == quadratic_q_parameter(grid)
    assert estimate.bound_value == pytest.approx((estimate.dimension * 0.4) ** -0.25)
    assert _within(estimate, exact_quadratic_hit_probability(grid, 0.4))


def test_estimate_quadratic_lo_rejects_zero_grid():
    with pytest.raises(ParameterError):
        estimate_quadratic_lo([[0, 0], [0, 0]], 0.5, trials=10)
    with pytest.raises(EmptyInputError):
        estimate_quadratic_lo([], 0.5, trials=10)


def test_cofactor_grid():
    matrix = SparseSymMatrix.from_dense([[1, 2], [2, 5]], RationalField())

    assert cofactor_grid(matrix) == [[5, -2], [-2, 1]]
    assert cofactor_grid(SparseSymMatrix.from_dense([[7]], RationalField())) == [[1]]


def test_cofactor_grid_borders_determinant(rational_matrix):
    field = rational_matrix.field
    border = [Fraction(1), Fraction(-1), Fraction(2)]
    corner = Fraction(3)
    dense = rational_matrix.to_dense()
    bordered = [row + [x] for row, x in zip(dense, border)] + [border + [corner]]
    grid = cofactor_grid(rational_matrix)

    quadratic = sum(border[i] * grid[i][j] * border[j] for i in range(3) for j in range(3))

    assert determinant(bordered, field) == corner * determinant(dense, field) - quadratic


def test_cofactor_grid_cap(field):
    with pytest.raises(CapacityError):
        cofactor_grid(SparseSymMatrix(23, field, {}))
