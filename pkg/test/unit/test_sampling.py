from collections import Counter

import pytest
from corank.errors import ParameterError, SamplingError
from corank.sampling import derive_seed, make_generator, random_regular_graph


def test_derive_seed_is_deterministic():
    assert derive_seed(42, 1, 2) == derive_seed(42, 1, 2)
    assert derive_seed(42, 1, 2) != derive_seed(42, 2, 1)
    assert derive_seed(42) != derive_seed(43)


def test_make_generator_is_reproducible():
    first = make_generator(7, 3).integers(0, 1000, size=10).tolist()
    second = make_generator(7, 3).integers(0, 1000, size=10).tolist()

    assert first == second


def test_random_regular_graph_is_simple_and_regular():
    edges = random_regular_graph(3, 10, seed=1)
    degrees = Counter(v for edge in edges for v in edge)

    assert list(edges) == sorted(edges)
    assert len(set(edges)) == len(edges) == 15
    assert all(i < j for i, j in edges)
    assert set(degrees.values()) == {3}
    assert random_regular_graph(3, 10, seed=1) == edges


def test_random_regular_graph_complete():
    edges = random_regular_graph(4, 5, seed=0)

    assert len(edges) == 10


@pytest.mark.parametrize('d, n', [(3, 7), (5, 5), (-1, 4)])
def test_random_regular_graph_invalid(d, n):
    with pytest.raises(ParameterError):
        random_regular_graph(d, n, seed=0)


def test_random_regular_graph_retry_budget():
    with pytest.raises(SamplingError):
        random_regular_graph(2, 6, seed=0, retries=0)
