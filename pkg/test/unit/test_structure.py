from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corank.errors import CapacityError, StructuralFailureError
from corank.graph import Graph, neighborhood
from corank.matrix import SparseSymMatrix
from corank.structure import (
    EXACT_MODE,
    STRUCTURAL_MODE,
    build_decomposition,
    circuits,
    classify_dependencies,
    is_saturated,
    is_unobstructed,
    largest_unobstructed_size,
    minimal_non_expanding_sets,
    predicted_rank_structural,
)


@st.composite
def graphs(draw, max_n=8):
    n = draw(st.integers(min_value=1, max_value=max_n))
    pairs = st.tuples(st.integers(min_value=0, max_value=n - 1), st.integers(min_value=0, max_value=n - 1))
    return Graph.from_edges(n, draw(st.lists(pairs, max_size=2 * n)))


def _brute_force_minimal_sets(graph, max_size):
    def non_expanding(vertices):
        return len(neighborhood(graph, vertices)) < len(vertices)

    found = []
    for size in range(1, max_size + 1):
        for vertices in combinations(range(graph.n), size):
            if not non_expanding(vertices):
                continue
            proper = (subset for k in range(1, size) for subset in combinations(vertices, k))
            if not any(non_expanding(subset) for subset in proper):
                found.append(vertices)
    return found


def test_minimal_non_expanding_sets_of_star(star_graph):
    witnesses = minimal_non_expanding_sets(star_graph, 2)

    assert [witness.vertices for witness in witnesses] == list(combinations(range(1, 5), 2))
    assert all(witness.neighborhood == (0,) for witness in witnesses)


def test_minimal_non_expanding_sets_isolated_vertex():
    witnesses = minimal_non_expanding_sets(Graph.from_edges(3, [(0, 1)]), 2)

    assert [witness.vertices for witness in witnesses] == [(2,)]
    assert witnesses[0].to_dict() == {'vertices': [2], 'neighborhood': [], 'minimal': True}


def test_minimal_non_expanding_sets_size_cap(star_graph):
    assert minimal_non_expanding_sets(star_graph, 0) == []
    with pytest.raises(CapacityError):
        minimal_non_expanding_sets(star_graph, 7)


def test_minimal_non_expanding_sets_within(star_graph):
    witnesses = minimal_non_expanding_sets(star_graph, 2, within=[0, 1, 2])

    assert [witness.vertices for witness in witnesses] == [(1, 2)]


@settings(max_examples=80, deadline=None)
@given(graphs(), st.integers(min_value=1, max_value=3))
def test_minimal_non_expanding_sets_match_brute_force(graph, max_size):
    witnesses = minimal_non_expanding_sets(graph, max_size)

    assert [witness.vertices for witness in witnesses] == _brute_force_minimal_sets(graph, max_size)


def test_is_unobstructed(star_graph):
    assert is_unobstructed(star_graph, [1, 2, 3], 1)
    assert not is_unobstructed(star_graph, [1, 2, 3], 2)
    assert is_unobstructed(star_graph, [0, 1], 2)
    assert is_unobstructed(star_graph, [], 2)


def test_largest_unobstructed_size(star_graph, path_graph):
    assert largest_unobstructed_size(star_graph, 2, EXACT_MODE) == 2
    assert largest_unobstructed_size(star_graph, 1, EXACT_MODE) == 5
    assert largest_unobstructed_size(star_graph, 2, STRUCTURAL_MODE) == 2
    assert largest_unobstructed_size(path_graph, 2) == 2


@settings(max_examples=60, deadline=None)
@given(graphs(), st.integers(min_value=1, max_value=3), st.data())
def test_largest_unobstructed_size_grows_with_edges(graph, s, data):
    i = data.draw(st.integers(min_value=0, max_value=graph.n - 1))
    j = data.draw(st.integers(min_value=0, max_value=graph.n - 1))

    before = largest_unobstructed_size(graph, s, EXACT_MODE)
    after = largest_unobstructed_size(graph.with_edge(i, j), s, EXACT_MODE)

    assert before <= after


def test_build_decomposition_star(star_graph):
    decomposition = build_decomposition(star_graph, 3)

    assert decomposition.T == (1, 2, 3, 4)
    assert decomposition.N_T == (0,)
    assert decomposition.T1 == (1,)
    assert decomposition.matching == ((0, 1),)
    assert decomposition.certified
    assert decomposition.predicted_rank == 2
    assert decomposition.to_dict()['matching'] == {'0': 1}


def test_build_decomposition_without_obstructions(path_graph):
    decomposition = build_decomposition(path_graph, 2)

    assert decomposition.T == ()
    assert decomposition.predicted_rank == 3


def test_build_decomposition_stalls(bipartite_graph):
    with pytest.raises(StructuralFailureError) as error:
        build_decomposition(bipartite_graph, 4)

    assert error.value.residual == (3, 4)


def test_predicted_rank_structural(path_graph):
    assert predicted_rank_structural(path_graph, 3) == 2


def test_is_saturated(path_matrix):
    assert is_saturated(path_matrix, 2)


def test_circuits(path_matrix, field):
    assert circuits(path_matrix) == [(0, 2)]
    assert circuits(SparseSymMatrix(2, field, {(0, 0): 1, (1, 1): 1})) == []


def test_circuits_of_repeated_rows(field):
    # Rows 0, 1 and 2 are all equal to e_3
    matrix = SparseSymMatrix(4, field, {(0, 3): 1, (1, 3): 1, (2, 3): 1})

    assert circuits(matrix) == [(0, 1), (0, 2), (1, 2)]


def test_circuits_size_cap(field):
    with pytest.raises(CapacityError):
        circuits(SparseSymMatrix(23, field, {}))


def test_classify_dependencies(path_matrix):
    reports = classify_dependencies(path_matrix, 3)

    assert len(reports) == 1
    assert reports[0].dependent_rows == (0, 2)
    assert reports[0].contained_witness.vertices == (0, 2)
    assert reports[0].theorem_holds

    reports = classify_dependencies(path_matrix, 2)

    assert not reports[0].theorem_holds
    assert reports[0].to_dict()['contained_witness'] is None
