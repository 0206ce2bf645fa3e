"""The graph G(Q) and the combinatorial rank ``min_S (n - |S| + |N(S)|)``.

Graph exchange format (UTF-8, 0-indexed)::

    n
    i j
    ...

A line ``i i`` encodes a self-loop at ``i``.
"""
import logging
from dataclasses import dataclass
from typing import FrozenSet, Tuple

import networkx as nx
import numpy as np

from corank.constants import BRUTE_FORCE_CAP
from corank.errors import CapacityError, ParameterError, ParseError
from corank.matching import HopcroftKarp, alternating_reachable
from corank.matrix import SparseSymMatrix

LOGGER = logging.getLogger(__name__)

_POPCOUNT_BYTES = np.array([bin(value).count('1') for value in range(256)], dtype=np.int64)


@dataclass(frozen=True)
class Graph:
    n: int
    adjacency: Tuple[FrozenSet[int], ...]
    loops: FrozenSet[int] = frozenset()

    @classmethod
    def from_edges(cls, n, edges):
        """Build a graph from ``(i, j)`` pairs; ``(i, i)`` is a loop and repeated pairs collapse."""
        neighbors = [set() for _ in range(n)]
        loops = set()
        for i, j in edges:
            if not (0 <= i < n and 0 <= j < n):
                message = f'Edge ({i}, {j}) is outside 0..{n - 1}.'
                LOGGER.critical(message)
                raise ParameterError(message)
            if i == j:
                loops.add(i)
            else:
                neighbors[i].add(j)
                neighbors[j].add(i)
        return cls(n, tuple(frozenset(members) for members in neighbors), frozenset(loops))

    def degree(self, v):
        """Number of distinct other vertices adjacent to ``v``; loops do not count."""
        return len(self.adjacency[v])

    def closed_neighbors(self, v):
        """N({v}): the neighbors of ``v``, plus ``v`` itself when it carries a loop."""
        if v in self.loops:
            return self.adjacency[v] | {v}
        return self.adjacency[v]

    def edges(self):
        pairs = [(i, j) for i in range(self.n) for j in self.adjacency[i] if i < j]
        pairs.extend((v, v) for v in self.loops)
        return sorted(pairs)

    def with_edge(self, i, j):
        return Graph.from_edges(self.n, self.edges() + [(i, j)])

    def induced(self, m):
        """Subgraph induced on the first ``m`` vertices."""
        if not 0 <= m <= self.n:
            message = f'Induced size m must satisfy 0 <= m <= {self.n}, got {m}.'
            LOGGER.critical(message)
            raise ParameterError(message)
        return Graph(
            m,
            tuple(frozenset(j for j in self.adjacency[i] if j < m) for i in range(m)),
            frozenset(v for v in self.loops if v < m),
        )

    def to_networkx(self):
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from(self.edges())
        return graph


def graph_of(matrix):
    """G(Q): an edge {i, j} for every nonzero off-diagonal entry, a loop for every nonzero diagonal one."""
    return Graph.from_edges(matrix.n, [(i, j) for i, j, _ in matrix.nonzeros()])


def neighborhood(graph, vertices):
    """N(S), which may contain members of S."""
    result = set()
    for v in vertices:
        result |= graph.closed_neighbors(v)
    return frozenset(result)


def is_non_expanding(graph, vertices):
    vertices = frozenset(vertices)
    if not vertices:
        message = 'Non-expansion is undefined for the empty set.'
        LOGGER.critical(message)
        raise ParameterError(message)
    return len(neighborhood(graph, vertices)) < len(vertices)


def deficiency_value(graph, vertices):
    """``n - |S| + |N(S)|`` for the set S."""
    vertices = frozenset(vertices)
    return graph.n - len(vertices) + len(neighborhood(graph, vertices))


def _row_graph(graph):
    return {v: sorted(graph.closed_neighbors(v)) for v in range(graph.n)}


def maximum_row_matching(graph):
    """Maximum matching of B(G), where row i meets column j iff j is in N({i})."""
    return HopcroftKarp(_row_graph(graph)).maximum_matching()


def combinatorial_rank(graph):
    """``min_S (n - |S| + |N(S)|)``, computed as the maximum matching size of B(G)."""
    size, _ = maximum_row_matching(graph)
    return size


def min_deficiency_witness(graph):
    """A set S attaining the combinatorial rank: the rows alternating-reachable from unmatched rows."""
    rows = _row_graph(graph)
    _, matching = HopcroftKarp(rows).maximum_matching()
    return tuple(sorted(alternating_reachable(rows, matching)))


def neighbor_masks(graph):
    """Bitmask of N({v}) for each vertex; requires ``n`` within the brute-force cap."""
    _check_brute_force_size(graph)
    masks = np.zeros(graph.n, dtype=np.int64)
    for v in range(graph.n):
        for w in graph.closed_neighbors(v):
            masks[v] |= 1 << w
    return masks


def popcount(values):
    values = np.ascontiguousarray(values, dtype=np.int64)
    return _POPCOUNT_BYTES[values.view(np.uint8)].reshape(values.shape + (8,)).sum(axis=-1)


def subset_tables(graph):
    """``(sizes, neighborhood_sizes, neighborhood_masks)`` indexed by every subset bitmask of V."""
    masks = neighbor_masks(graph)
    union = np.zeros(1 << graph.n, dtype=np.int64)
    sizes = np.zeros(1 << graph.n, dtype=np.int64)
    for v in range(graph.n):
        half = 1 << v
        union[half:2 * half] = union[:half] | masks[v]
        sizes[half:2 * half] = sizes[:half] + 1
    return sizes, popcount(union), union


def _check_brute_force_size(graph):
    if graph.n > BRUTE_FORCE_CAP:
        message = f'Subset enumeration is capped at n={BRUTE_FORCE_CAP}, got n={graph.n}.'
        LOGGER.critical(message)
        raise CapacityError(message)


def brute_force_combinatorial_rank(graph):
    """The same minimum as ``combinatorial_rank``, by iterating over all 2^n subsets."""
    sizes, neighborhood_sizes, _ = subset_tables(graph)
    return int(np.min(graph.n - sizes + neighborhood_sizes))


def mask_to_vertices(mask):
    mask = int(mask)
    return tuple(v for v in range(mask.bit_length()) if mask >> v & 1)


def format_graph(graph):
    lines = [str(graph.n)]
    lines.extend(f'{i} {j}' for i, j in graph.edges())
    return '\n'.join(lines) + '\n'


def parse_graph(text):
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError('missing vertex count', 1)
    try:
        n = int(lines[0].strip())
    except ValueError:
        raise ParseError(f'invalid vertex count "{lines[0].strip()}"', 1)
    if n < 0:
        raise ParseError(f'vertex count must be non-negative, got {n}', 1)
    edges = []
    for line_number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        tokens = line.split()
        try:
            i, j = (int(token) for token in tokens)
        except ValueError:
            raise ParseError('expected "i j"', line_number)
        if not (0 <= i < n and 0 <= j < n):
            raise ParseError(f'edge ({i}, {j}) outside 0..{n - 1}', line_number)
        edges.append((i, j))
    return Graph.from_edges(n, edges)


def write_graph(graph, path):
    with open(path, 'w', encoding='utf-8', newline='\n') as handle:
        handle.write(format_graph(graph))


def read_graph(path):
    with open(path, 'r', encoding='utf-8') as handle:
        return parse_graph(handle.read())


def pattern_matching_rank(matrix):
    """Maximum matching between rows and columns of the nonzero pattern; bounds the rank of any matrix."""
    rows = {i: [] for i in range(matrix.n)}
    for i, j, _ in matrix.nonzeros():
        rows[i].append(j)
        if i != j and isinstance(matrix, SparseSymMatrix):
            rows[j].append(i)
    size, _ = HopcroftKarp({i: sorted(columns) for i, columns in rows.items()}).maximum_matching()
    return size
