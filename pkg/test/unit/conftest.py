from fractions import Fraction

import pytest
from corank.field import PrimeField, RationalField
from corank.graph import Graph
from corank.matrix import SparseSymMatrix


@pytest.fixture
def field():
    return PrimeField()


@pytest.fixture
def path_matrix(field):
    """0 - 1 - 2 with zero diagonal; rows 0 and 2 are proportional, so the rank is 2."""
    return SparseSymMatrix(3, field, {(0, 1): 2, (1, 2): 3})


@pytest.fixture
def path_graph():
    return Graph.from_edges(3, [(0, 1), (1, 2)])


@pytest.fixture
def star_graph():
    """Center 0 and leaves 1..4; the leaves share the single neighbor 0."""
    return Graph.from_edges(5, [(0, leaf) for leaf in range(1, 5)])


@pytest.fixture
def bipartite_graph():
    """K_{3,2} on {0, 1, 2} x {3, 4}."""
    return Graph.from_edges(5, [(i, j) for i in range(3) for j in (3, 4)])


@pytest.fixture
def rational_matrix():
    return SparseSymMatrix.from_dense([[1, 2, 0], [2, 5, 1], [0, 1, Fraction(1, 2)]], RationalField())


@pytest.fixture
def matrix_file(tmp_path):
    path = tmp_path / 'path.txt'
    path.write_text(f'3 {PrimeField().q} prime-field\n0 1 2\n1 2 3\n', encoding='utf-8')
    return str(path)
