"""Non-expanding sets, the T / T1 decomposition and dependency witnesses.

A minimal non-expanding set S is connected in the auxiliary graph where two
vertices meet when their neighborhoods intersect: otherwise S splits into
parts with disjoint neighborhoods and one part is already non-expanding.
Enumeration therefore only grows connected candidates, and never extends a
candidate that is already non-expanding.
"""
import logging
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Optional, Tuple

import numpy as np

from corank.constants import BRUTE_FORCE_CAP, CIRCUIT_SEARCH_BUDGET, DEFAULT_ENUMERATION_CAP
from corank.errors import CapacityError, StructuralFailureError
from corank.graph import graph_of, neighborhood, subset_tables
from corank.rank import exact_rank, left_null_space, null_space

LOGGER = logging.getLogger(__name__)

EXACT_MODE = 'exact'
STRUCTURAL_MODE = 'structural'
AUTO_MODE = 'auto'
UNOBSTRUCTED_MODES = (AUTO_MODE, EXACT_MODE, STRUCTURAL_MODE)


@dataclass(frozen=True)
class NonExpandingWitness:
    vertices: Tuple[int, ...]
    neighborhood: Tuple[int, ...]
    minimal: bool = True

    def to_dict(self):
        return {
            'vertices': list(self.vertices),
            'neighborhood': list(self.neighborhood),
            'minimal': self.minimal,
        }


@dataclass(frozen=True)
class StructureDecomposition:
    """T, N(T), T1 and the unique matching N(T) -> T1 produced by the greedy algorithm."""

    n: int
    s: int
    T: Tuple[int, ...]
    N_T: Tuple[int, ...]
    T1: Tuple[int, ...]
    matching: Tuple[Tuple[int, int], ...] = field(default=())

    @property
    def certified(self):
        """N(T) and T are disjoint."""
        return not set(self.T) & set(self.N_T)

    @property
    def predicted_rank(self):
        return self.n - len(set(self.T) - set(self.T1))

    def to_dict(self):
        return {
            'n': self.n,
            's': self.s,
            'T': list(self.T),
            'N_T': list(self.N_T),
            'T1': list(self.T1),
            'matching': {str(x): t for x, t in sorted(self.matching)},
            'certified': self.certified,
            'predicted_rank': self.predicted_rank,
        }


@dataclass(frozen=True)
class DependencyReport:
    dependent_rows: Tuple[int, ...]
    contained_witness: Optional[NonExpandingWitness] = None

    @property
    def theorem_holds(self):
        return self.contained_witness is not None

    def to_dict(self):
        return {
            'dependent_rows': list(self.dependent_rows),
            'contained_witness': self.contained_witness.to_dict() if self.contained_witness else None,
            'theorem_holds': self.theorem_holds,
        }


def _auxiliary_graph(graph, eligible):
    """Eligible vertices meet when their neighborhoods intersect."""
    holders = {}
    for v in eligible:
        for x in graph.closed_neighbors(v):
            holders.setdefault(x, set()).add(v)
    aux = {}
    for v in eligible:
        linked = set()
        for x in graph.closed_neighbors(v):
            linked |= holders[x]
        linked.discard(v)
        aux[v] = linked
    return aux


def _is_minimal(graph, vertices):
    for size in range(1, len(vertices)):
        for subset in combinations(vertices, size):
            if len(neighborhood(graph, subset)) < size:
                return False
    return True


def minimal_non_expanding_sets(graph, max_size, within=None, cap=DEFAULT_ENUMERATION_CAP):
    """Every minimal non-expanding set of size at most ``max_size``, optionally inside ``within``."""
    if max_size > cap:
        message = f'Non-expanding set enumeration is capped at size {cap}, got {max_size}.'
        LOGGER.critical(message)
        raise CapacityError(message)
    if max_size < 1:
        return []

    pool = range(graph.n) if within is None else sorted(set(within))
    # A member of a non-expanding set of size k has |N({v})| <= k - 1
    eligible = [v for v in pool if len(graph.closed_neighbors(v)) <= max_size - 1]
    aux = _auxiliary_graph(graph, eligible)
    found = []

    def grow(current, current_neighborhood, extension, root):
        if len(current_neighborhood) < len(current):
            ordered = tuple(sorted(current))
            if _is_minimal(graph, ordered):
                found.append(NonExpandingWitness(ordered, tuple(sorted(current_neighborhood))))
            return
        if len(current) == max_size or len(current_neighborhood) >= max_size:
            return
        closed = set(current)
        for member in current:
            closed |= aux[member]
        extension = set(extension)
        while extension:
            w = min(extension)
            extension.discard(w)
            exclusive = {u for u in aux[w] if u > root and u not in closed}
            grow(current + [w], current_neighborhood | graph.closed_neighbors(w), extension | exclusive, root)

    for v in eligible:
        grow([v], graph.closed_neighbors(v), {u for u in aux[v] if u > v}, v)

    found.sort(key=lambda witness: (len(witness.vertices), witness.vertices))
    LOGGER.debug(f'{len(found)} minimal non-expanding sets of size <= {max_size}')
    return found


def is_unobstructed(graph, vertices, s):
    """True iff no subset of ``vertices`` with at most ``s`` members is non-expanding."""
    vertices = sorted(set(vertices))
    limit = min(s, len(vertices))
    if limit < 1:
        return True
    if limit > DEFAULT_ENUMERATION_CAP and len(vertices) > BRUTE_FORCE_CAP:
        message = f'Obstruction scan of {len(vertices)} vertices up to size {limit} is not feasible.'
        LOGGER.critical(message)
        raise CapacityError(message)
    witnesses = minimal_non_expanding_sets(graph, limit, within=vertices, cap=max(DEFAULT_ENUMERATION_CAP, limit))
    return not witnesses


def _largest_unobstructed_exact(graph, s):
    sizes, neighborhood_sizes, _ = subset_tables(graph)
    tainted = (sizes >= 1) & (sizes <= s) & (neighborhood_sizes < sizes)
    # Spread every obstruction to all of its supersets
    for v in range(graph.n):
        view = tainted.reshape(-1, 2, 1 << v)
        view[:, 1, :] |= view[:, 0, :]
    return int(np.max(sizes[~tainted]))


def largest_unobstructed_size(graph, s, mode=AUTO_MODE):
    """Size of the largest s-unobstructed vertex set.

    ``exact`` enumerates all subsets (n within the brute-force cap).
    ``structural`` returns n - |T \\ T1| for T built from non-expanding sets of
    size at most s; that value is only an estimate when N(T) meets T.
    ``auto`` picks exact whenever it is feasible.
    """
    if mode == AUTO_MODE:
        mode = EXACT_MODE if graph.n <= BRUTE_FORCE_CAP else STRUCTURAL_MODE
    if mode == EXACT_MODE:
        return _largest_unobstructed_exact(graph, s)
    decomposition = build_decomposition(graph, s + 1)
    if not decomposition.certified:
        LOGGER.warning(f'Structural estimate of U is uncertified: N(T) meets T for s={s}.')
    return decomposition.predicted_rank


def build_decomposition(graph, s, cap=DEFAULT_ENUMERATION_CAP):
    """T from minimal non-expanding sets of size at most s - 1, then the greedy T1 matching.

    At each step the lowest-index unused vertex of T with exactly one unused
    neighbor in N(T) joins T1 and is matched to that neighbor.
    """
    witnesses = minimal_non_expanding_sets(graph, s - 1, cap=cap)
    t_set = set()
    for witness in witnesses:
        t_set.update(witness.vertices)
    n_t = neighborhood(graph, t_set)

    used = set()
    unmatched = set(n_t)
    matching = []
    t1 = []
    candidates = sorted(t_set)
    while unmatched:
        pick = None
        for t in candidates:
            if t in used:
                continue
            free = [x for x in graph.closed_neighbors(t) if x in n_t and x not in used]
            if len(free) == 1:
                pick = (t, free[0])
                break
        if pick is None:
            message = f'Greedy T1 matching stalled with {len(unmatched)} vertices of N(T) unmatched.'
            LOGGER.error(message)
            raise StructuralFailureError(message, residual=unmatched)
        t, x = pick
        used.update((t, x))
        unmatched.discard(x)
        matching.append((x, t))
        t1.append(t)

    return StructureDecomposition(
        n=graph.n,
        s=s,
        T=tuple(candidates),
        N_T=tuple(sorted(n_t)),
        T1=tuple(sorted(t1)),
        matching=tuple(sorted(matching)),
    )


def predicted_rank_structural(graph, s):
    return build_decomposition(graph, s).predicted_rank


def is_saturated(matrix, s):
    """rank(Q) equals the size of the largest s-unobstructed set of G(Q)."""
    return exact_rank(matrix) == largest_unobstructed_size(graph_of(matrix), s, mode=EXACT_MODE)


def circuits(matrix, cap=BRUTE_FORCE_CAP, budget=CIRCUIT_SEARCH_BUDGET):
    """Every minimal dependent set of rows, as sorted index tuples.

    A support-minimal vector of the dependency space vanishes on a set of
    corank - 1 coordinates whose restriction has rank corank - 1, so the
    search runs over those coordinate sets.
    """
    if matrix.n > cap:
        message = f'Circuit search is capped at n={cap}, got n={matrix.n}.'
        LOGGER.critical(message)
        raise CapacityError(message)
    basis = left_null_space(matrix)
    corank = len(basis)
    if corank == 0:
        return []
    if comb(matrix.n, corank - 1) > budget:
        message = f'Circuit search over {comb(matrix.n, corank - 1)} coordinate sets exceeds the budget {budget}.'
        LOGGER.critical(message)
        raise CapacityError(message)

    field_ = matrix.field
    supports = set()
    for zeros in combinations(range(matrix.n), corank - 1):
        restricted = [[basis[k][f] for k in range(corank)] for f in zeros]
        solutions = null_space(restricted, field_) if zeros else [[field_.one]]
        if len(solutions) != 1:
            continue
        coefficients = solutions[0]
        support = []
        for i in range(matrix.n):
            value = field_.zero
            for k in range(corank):
                if coefficients[k] != 0 and basis[k][i] != 0:
                    value = field_.add(value, field_.mul(coefficients[k], basis[k][i]))
            if value != 0:
                support.append(i)
        if support:
            supports.add(tuple(support))

    minimal = [c for c in supports if not any(set(other) < set(c) for other in supports)]
    return sorted(minimal, key=lambda c: (len(c), c))


def classify_dependencies(matrix, s, cap=BRUTE_FORCE_CAP):
    """One report per minimal dependent row set, naming a contained non-expanding set of size <= s - 1."""
    graph = graph_of(matrix)
    reports = []
    for rows in circuits(matrix, cap=cap):
        limit = min(s - 1, len(rows))
        witnesses = minimal_non_expanding_sets(graph, limit, within=rows, cap=max(DEFAULT_ENUMERATION_CAP, limit))
        reports.append(DependencyReport(rows, witnesses[0] if witnesses else None))
    violations = sum(1 for report in reports if not report.theorem_holds)
    if violations:
        LOGGER.debug(f'{violations} of {len(reports)} dependent sets carry no small non-expanding witness')
    return reports
