import networkx as nx
from hypothesis import given, settings
from hypothesis import strategies as st

from corank.matching import HopcroftKarp, alternating_reachable


@st.composite
def bipartite_lists(draw):
    left = draw(st.integers(min_value=1, max_value=9))
    right = draw(st.integers(min_value=1, max_value=9))
    return {
        u: sorted(draw(st.sets(st.integers(min_value=0, max_value=right - 1), max_size=right))) for u in range(left)
    }


def _check_matching(graph_left, matching):
    assert len(set(matching.values())) == len(matching)
    for left, right in matching.items():
        assert right in graph_left[left]


def test_maximum_matching_small():
    graph_left = {'a': [1, 2], 'b': [1], 'c': [1]}

    size, matching = HopcroftKarp(graph_left).maximum_matching()

    assert size == 2
    assert matching['a'] == 2
    _check_matching(graph_left, matching)


def test_maximum_matching_needs_augmenting_path():
    # Greedy in scan order takes a-1 first and must reroute a to 2
    graph_left = {'a': [1, 2], 'b': [1]}

    size, matching = HopcroftKarp(graph_left).maximum_matching()

    assert size == 2
    assert matching == {'a': 2, 'b': 1}


def test_maximum_matching_empty():
    assert HopcroftKarp({}).maximum_matching() == (0, {})
    assert HopcroftKarp({0: [], 1: []}).maximum_matching() == (0, {})


def test_maximum_matching_is_deterministic():
    graph_left = {i: [(i * 7 + k) % 11 for k in range(3)] for i in range(11)}

    assert HopcroftKarp(graph_left).maximum_matching() == HopcroftKarp(graph_left).maximum_matching()


def test_long_chain_does_not_recurse():
    n = 20000
    # Scanning from the top leaves row 0 unmatched behind one augmenting path through every row
    graph_left = {i: [i - 1, i] if i else [0] for i in reversed(range(n))}

    size, matching = HopcroftKarp(graph_left).maximum_matching()

    assert size == n
    _check_matching(graph_left, matching)


@settings(max_examples=80, deadline=None)
@given(bipartite_lists())
def test_maximum_matching_matches_networkx(graph_left):
    size, matching = HopcroftKarp(graph_left).maximum_matching()

    graph = nx.Graph()
    graph.add_nodes_from(('L', u) for u in graph_left)
    for u, rights in graph_left.items():
        graph.add_edges_from((('L', u), ('R', v)) for v in rights)
    expected = nx.bipartite.hopcroft_karp_matching(graph, top_nodes=[('L', u) for u in graph_left])

    assert size == len(expected) // 2
    _check_matching(graph_left, matching)


@settings(max_examples=80, deadline=None)
@given(bipartite_lists())
def test_alternating_reachable_attains_deficiency(graph_left):
    size, matching = HopcroftKarp(graph_left).maximum_matching()

    reached = alternating_reachable(graph_left, matching)
    reached_neighborhood = {v for u in reached for v in graph_left[u]}

    assert len(reached) - len(reached_neighborhood) == len(graph_left) - size
