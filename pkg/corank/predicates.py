"""Graph classes used by the augmentation argument.

Every checker returns a ``TriState``. ``fails`` always carries a certificate
that can be re-checked against the raw definition; large instances where no
sound answer is available come back ``unknown``.
"""
import heapq
import logging
import math
from collections import Counter, deque
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Tuple

import networkx as nx
import numpy as np

from corank.constants import BRUTE_FORCE_CAP, DEFAULT_ENUMERATION_CAP, EXACT_GOODNESS_CAP
from corank.errors import ParameterError
from corank.graph import neighbor_masks, popcount, subset_tables

LOGGER = logging.getLogger(__name__)

HOLDS = 'holds'
FAILS = 'fails'
UNKNOWN = 'unknown'

FORMULAS = {
    'degree_threshold': 'max(1, ln ln n)',
    'k': 'degree_threshold / (2 p)',
    'unfloored_k': 'ln ln n / (2 p)',
    'small_set_bound': 'min(n, n / (ln n)^(3/2))',
    'low_degree_budget': '1 / (p ln n)',
}


@dataclass(frozen=True)
class GoodnessParams:
    n: int
    p: float
    s: int
    k: float
    degree_threshold: float
    small_set_bound: float
    low_degree_budget: float
    unfloored_k: Optional[float] = None

    @classmethod
    def derive(cls, n, p, s, degree_threshold=None):
        """Derive the thresholds for (n, p, s); ln ln n is floored at 1 so small graphs stay meaningful."""
        if not 0 < p < 1:
            message = f'Probability p must satisfy 0 < p < 1, got {p}.'
            LOGGER.critical(message)
            raise ParameterError(message)
        if s < 1:
            message = f'Obstruction size s must be at least 1, got {s}.'
            LOGGER.critical(message)
            raise ParameterError(message)
        log_n = math.log(n) if n > 1 else 0.0
        if degree_threshold is None:
            degree_threshold = max(1.0, math.log(log_n)) if log_n > 1 else 1.0
        small_set_bound = min(n, n / log_n ** 1.5) if log_n > 0 else n
        low_degree_budget = 1 / (p * log_n) if log_n > 0 else math.inf
        return cls(
            n=n,
            p=p,
            s=s,
            k=degree_threshold / (2 * p),
            degree_threshold=degree_threshold,
            small_set_bound=small_set_bound,
            low_degree_budget=low_degree_budget,
            unfloored_k=math.log(log_n) / (2 * p) if log_n > 0 else None,
        )

    def to_dict(self):
        return {
            'n': self.n,
            'p': self.p,
            's': self.s,
            'k': self.k,
            'degree_threshold': self.degree_threshold,
            'small_set_bound': self.small_set_bound,
            'low_degree_budget': self.low_degree_budget,
            'unfloored_k': self.unfloored_k,
            'formulas': dict(FORMULAS),
        }


@dataclass(frozen=True)
class TriState:
    value: str
    certificate: Optional[Tuple[int, ...]] = None
    reason: str = ''

    @classmethod
    def holds(cls, reason=''):
        return cls(HOLDS, None, reason)

    @classmethod
    def fails(cls, certificate, reason):
        return cls(FAILS, tuple(certificate), reason)

    @classmethod
    def unknown(cls, reason):
        return cls(UNKNOWN, None, reason)

    @property
    def is_holds(self):
        return self.value == HOLDS

    @property
    def is_fails(self):
        return self.value == FAILS

    def to_dict(self):
        return {
            'value': self.value,
            'certificate': list(self.certificate) if self.certificate is not None else None,
            'reason': self.reason,
        }


def low_degree_vertices(graph, params):
    return [v for v in range(graph.n) if graph.degree(v) <= params.degree_threshold]


def _shortest_cycle_through(graph, root, limit):
    """Vertices of a shortest cycle of length 3..limit through ``root``, or None."""
    max_depth = limit // 2
    depth = {root: 0}
    parent = {root: None}
    branch = {root: None}
    queue = deque([root])
    best = None
    while queue:
        x = queue.popleft()
        for y in sorted(graph.adjacency[x]):
            if y not in depth:
                if depth[x] + 1 > max_depth:
                    continue
                depth[y] = depth[x] + 1
                parent[y] = x
                branch[y] = y if x == root else branch[x]
                queue.append(y)
            elif x != root and y != root and y != parent[x] and branch[y] != branch[x]:
                length = depth[x] + depth[y] + 1
                if length <= limit and (best is None or length < best[0]):
                    best = (length, x, y)
    if best is None:
        return None

    def path_to_root(v):
        path = []
        while v is not None:
            path.append(v)
            v = parent[v]
        return path

    _, x, y = best
    return tuple(reversed(path_to_root(x))) + tuple(path_to_root(y)[:-1])


def _steiner_vertices(graph, terminals, bound):
    """Vertices of a tree with at most ``bound`` edges spanning ``terminals``, or None.

    Dreyfus-Wagner over terminal subsets with a bounded Dijkstra relaxation per
    subset, so only the ball of radius ``bound`` is ever touched.
    """
    full = (1 << len(terminals)) - 1
    cost = {}
    back = {}
    for mask in range(1, full + 1):
        current = {}
        pointers = {}
        if mask & (mask - 1) == 0:
            terminal = terminals[mask.bit_length() - 1]
            current[terminal] = 0
            pointers[terminal] = ('leaf', None)
        else:
            lowest = mask & -mask
            sub = (mask - 1) & mask
            while sub:
                if sub & lowest:
                    right = cost[mask ^ sub]
                    for v, left_cost in cost[sub].items():
                        right_cost = right.get(v)
                        if right_cost is None:
                            continue
                        total = left_cost + right_cost
                        if total <= bound and total < current.get(v, math.inf):
                            current[v] = total
                            pointers[v] = ('split', sub)
                sub = (sub - 1) & mask
        heap = [(value, v) for v, value in current.items()]
        heapq.heapify(heap)
        while heap:
            value, v = heapq.heappop(heap)
            if value > current[v] or value + 1 > bound:
                continue
            for u in graph.adjacency[v]:
                if value + 1 < current.get(u, math.inf):
                    current[u] = value + 1
                    pointers[u] = ('edge', v)
                    heapq.heappush(heap, (value + 1, u))
        cost[mask] = current
        back[mask] = pointers

    if not cost[full]:
        return None
    root = min(cost[full], key=lambda v: (cost[full][v], v))
    vertices = set()
    stack = [(full, root)]
    while stack:
        mask, v = stack.pop()
        vertices.add(v)
        kind, argument = back[mask][v]
        if kind == 'edge':
            stack.append((mask, argument))
        elif kind == 'split':
            stack.append((argument, v))
            stack.append((mask ^ argument, v))
    return tuple(sorted(vertices))


def _ball(graph, root, radius):
    depth = {root: 0}
    queue = deque([root])
    while queue:
        x = queue.popleft()
        if depth[x] == radius:
            continue
        for y in graph.adjacency[x]:
            if y not in depth:
                depth[y] = depth[x] + 1
                queue.append(y)
    return depth


def is_well_separated(graph, params):
    """W2 (no loop or cycle of length 3..12s through a low-degree vertex), then W1.

    W1 fails when some connected subgraph on at most 5s vertices holds s
    low-degree vertices, which happens iff those s vertices have a Steiner
    tree with at most 5s - 1 edges.
    """
    s = params.s
    low = low_degree_vertices(graph, params)
    for v in low:
        if v in graph.loops:
            return TriState.fails((v,), 'W2')
        cycle = _shortest_cycle_through(graph, v, 12 * s)
        if cycle is not None:
            return TriState.fails(cycle, 'W2')

    low_set = set(low)
    edge_bound = 5 * s - 1
    for root in low:
        nearby = sorted(w for w in _ball(graph, root, edge_bound) if w in low_set and w > root)
        for others in combinations(nearby, s - 1):
            tree = _steiner_vertices(graph, (root,) + others, edge_bound)
            if tree is not None:
                return TriState.fails(tree, 'W1')
    return TriState.holds()


def _simple_networkx(graph):
    simple = nx.Graph()
    simple.add_nodes_from(range(graph.n))
    simple.add_edges_from((i, j) for i, j in graph.edges() if i != j)
    return simple


def _adjacency_masks(graph):
    masks = np.zeros(graph.n, dtype=np.int64)
    for v in range(graph.n):
        for w in graph.adjacency[v]:
            masks[v] |= 1 << w
    return masks


def _edge_and_degree_tables(graph):
    """Edge count of the induced subgraph and degree sum, per subset bitmask."""
    masks = _adjacency_masks(graph)
    edges = np.zeros(1 << graph.n, dtype=np.int64)
    degrees = np.zeros(1 << graph.n, dtype=np.int64)
    for v in range(graph.n):
        half = 1 << v
        index = np.arange(half, dtype=np.int64)
        edges[half:2 * half] = edges[:half] + popcount(index & masks[v])
        degrees[half:2 * half] = degrees[:half] + graph.degree(v)
    return edges, degrees


def _spread_to_supersets(flags, n):
    flags = flags.copy()
    for v in range(n):
        view = flags.reshape(-1, 2, 1 << v)
        view[:, 1, :] |= view[:, 0, :]
    return flags


def _first_set(flags):
    """Lowest-mask member among the smallest flagged subsets."""
    candidates = np.flatnonzero(flags)
    sizes = popcount(candidates)
    best = candidates[np.lexsort((candidates, sizes))[0]]
    return tuple(v for v in range(int(best).bit_length()) if int(best) >> v & 1)


def is_locally_sparse(graph, params):
    """Every subgraph on at most n / (ln n)^(3/2) vertices has average degree below 8."""
    if graph.n <= BRUTE_FORCE_CAP:
        sizes, _, _ = subset_tables(graph)
        edges, _ = _edge_and_degree_tables(graph)
        dense = (sizes >= 1) & (sizes <= params.small_set_bound) & (edges >= 4 * sizes)
        if dense.any():
            return TriState.fails(_first_set(dense), 'average-degree')
        return TriState.holds('exact')

    # A subgraph of average degree >= 8 keeps a subgraph of minimum degree >= 4
    core = nx.k_core(_simple_networkx(graph), 4)
    if core.number_of_nodes() == 0:
        return TriState.holds('empty-4-core')
    for component in nx.connected_components(core):
        if len(component) > params.small_set_bound:
            continue
        induced = core.subgraph(component)
        if 2 * induced.number_of_edges() >= 8 * len(component):
            return TriState.fails(sorted(component), 'average-degree')
    return TriState.unknown('4-core present')


def _boundary_size(graph, vertices):
    inside = set(vertices)
    return sum(1 for v in inside for w in graph.adjacency[v] if w not in inside)


def _has_tiny_escape(graph, vertices, s):
    """Some S' inside ``vertices`` with 1 <= |S'| <= s - 1 and at most |S'| - 1 boundary edges."""
    for size in range(1, min(s - 1, len(vertices)) + 1):
        for subset in combinations(vertices, size):
            if _boundary_size(graph, subset) <= size - 1:
                return True
    return False


def _connected_sets(graph, max_size):
    """Every connected vertex set of size 1..max_size, each once, grown from its smallest vertex."""
    if max_size < 1:
        return

    def grow(current, reached, extension, root):
        yield current
        if len(current) == max_size:
            return
        extension = set(extension)
        while extension:
            w = min(extension)
            extension.discard(w)
            fresh = {u for u in graph.adjacency[w] if u > root and u not in reached}
            yield from grow(current + (w,), reached | graph.adjacency[w] | {w}, extension | fresh, root)

    for v in range(graph.n):
        yield from grow((v,), graph.adjacency[v] | {v}, {u for u in graph.adjacency[v] if u > v}, v)


def is_small_set_expander(graph, params):
    """Small sets send at least |S| edges out, unless they hold a tiny set S' with at most |S'| - 1 edges out."""
    s = params.s
    if graph.n <= BRUTE_FORCE_CAP:
        sizes, _, _ = subset_tables(graph)
        edges, degrees = _edge_and_degree_tables(graph)
        boundary = degrees - 2 * edges
        tiny = (sizes >= 1) & (sizes <= s - 1) & (boundary <= sizes - 1)
        escaped = _spread_to_supersets(tiny, graph.n)
        violating = (sizes >= 1) & (sizes <= params.small_set_bound) & (boundary < sizes) & ~escaped
        if violating.any():
            return TriState.fails(_first_set(violating), 'expansion')
        return TriState.holds('exact')

    for component in nx.connected_components(_simple_networkx(graph)):
        if len(component) > min(params.small_set_bound, BRUTE_FORCE_CAP):
            continue
        members = tuple(sorted(component))
        if not _has_tiny_escape(graph, members, s):
            return TriState.fails(members, 'expansion')

    # A disconnected violating set has a violating component
    limit = math.floor(params.small_set_bound)
    if limit > DEFAULT_ENUMERATION_CAP:
        return TriState.unknown(f'small sets reach {limit} vertices, above the enumeration cap')
    for members in _connected_sets(graph, limit):
        if _boundary_size(graph, members) < len(members) and not _has_tiny_escape(graph, members, s):
            return TriState.fails(sorted(members), 'expansion')
    return TriState.holds('connected-enumeration')


def _unique_neighbor_count(graph, vertices, outside_only):
    hits = Counter()
    for v in vertices:
        for x in graph.closed_neighbors(v):
            hits[x] += 1
    return sum(1 for x, count in hits.items() if count == 1 and not (outside_only and x in vertices))


def _check_nonempty(vertices):
    if not vertices:
        message = 'Niceness is undefined for the empty set.'
        LOGGER.critical(message)
        raise ParameterError(message)


def is_nice(graph, vertices, outside_only=False):
    """At least two vertices have exactly one neighbor in S; loops count as self-adjacency."""
    vertices = frozenset(vertices)
    _check_nonempty(vertices)
    return _unique_neighbor_count(graph, vertices, outside_only) >= 2


def is_nearly_nice(graph, vertices, outside_only=False):
    vertices = frozenset(vertices)
    _check_nonempty(vertices)
    return _unique_neighbor_count(graph, vertices, outside_only) >= 1


def _unique_neighbor_table(graph):
    masks = neighbor_masks(graph)
    subsets = np.arange(1 << graph.n, dtype=np.int64)
    counts = np.zeros(1 << graph.n, dtype=np.int64)
    for mask in masks:
        shared = subsets & mask
        counts += (shared != 0) & ((shared & (shared - 1)) == 0)
    return counts


def _minimal_flags(flags, n):
    """Flagged subsets none of whose proper nonempty subsets is flagged."""
    closure = _spread_to_supersets(flags, n)
    below = np.zeros_like(flags)
    subsets = np.arange(1 << n, dtype=np.int64)
    for v in range(n):
        bit = 1 << v
        holders = subsets[(subsets & bit) != 0]
        below[holders] |= closure[holders ^ bit]
    return flags & ~below


def _goodness_conditions(graph, params):
    sizes, neighborhood_sizes, _ = subset_tables(graph)
    counts = _unique_neighbor_table(graph)
    nonempty = sizes >= 1
    small = nonempty & (sizes < params.k + 1)
    obstruction = nonempty & (sizes <= params.s - 1) & (neighborhood_sizes < sizes)

    minimal_non_nice = _minimal_flags(nonempty & (counts < 2), graph.n)
    first = minimal_non_nice & small & ~_spread_to_supersets(obstruction, graph.n)
    if first.any():
        return TriState.fails(_first_set(first), 'condition-1')

    minimal_non_nearly_nice = _minimal_flags(nonempty & (counts < 1), graph.n)
    second = minimal_non_nearly_nice & small & ~obstruction
    if second.any():
        return TriState.fails(_first_set(second), 'condition-2')
    return TriState.holds()


def is_good(graph, params):
    """The four goodness conditions, checked as few low-degree vertices, well-separation, then niceness."""
    weak = [v for v in range(graph.n) if graph.degree(v) < params.s]
    if len(weak) > params.low_degree_budget:
        return TriState.fails(weak, 'condition-3')
    separation = is_well_separated(graph, params)
    if separation.is_fails:
        return TriState.fails(separation.certificate, 'condition-4')
    if graph.n > EXACT_GOODNESS_CAP:
        return TriState.unknown(f'conditions 1-2 need n <= {EXACT_GOODNESS_CAP}')
    return _goodness_conditions(graph, params)


def is_normal_pair(graph, next_graph, params):
    """The vertex added by ``next_graph`` has no neighbor of degree at most s in ``graph``."""
    if next_graph.n != graph.n + 1 or next_graph.induced(graph.n) != graph:
        message = f'Graph on {next_graph.n} vertices is not a one-vertex extension of the graph on {graph.n}.'
        LOGGER.critical(message)
        raise ParameterError(message)
    new_vertex = graph.n
    return all(graph.degree(u) > params.s for u in next_graph.adjacency[new_vertex])


def evaluate_predicates(graph, params):
    return {
        'well_separated': is_well_separated(graph, params),
        'locally_sparse': is_locally_sparse(graph, params),
        'small_set_expander': is_small_set_expander(graph, params),
        'good': is_good(graph, params),
    }
