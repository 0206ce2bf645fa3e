"""Maximum bipartite matching (Hopcroft-Karp) over the row/column graph B(G)."""
from collections import deque
from typing import Dict, Hashable, List, Tuple

INFINITY = float('inf')


class HopcroftKarp:
    """Hopcroft-Karp on a bipartite graph given as ``{left: [right, ...]}``.

    Augmenting paths are searched iteratively, so deep alternating paths on
    large graphs do not hit the recursion limit. Left vertices are scanned in
    insertion order and right vertices in list order, which makes the returned
    matching deterministic.
    """

    def __init__(self, graph_left: Dict[Hashable, List[Hashable]]):
        self._graph_left = graph_left
        self._left = list(graph_left)
        self._pair_left: Dict[Hashable, Hashable] = {}
        self._pair_right: Dict[Hashable, Hashable] = {}
        self._dist: Dict[Hashable, float] = {}
        self._free_distance = INFINITY

    def maximum_matching(self) -> Tuple[int, Dict[Hashable, Hashable]]:
        """Return the matching size and a ``{left: right}`` maximum matching."""
        self._pair_left.clear()
        self._pair_right.clear()
        size = 0
        while self._bfs():
            for left in self._left:
                if left not in self._pair_left and self._dfs(left):
                    size += 1
        return size, dict(self._pair_left)

    def _bfs(self):
        queue = deque()
        for left in self._left:
            if left in self._pair_left:
                self._dist[left] = INFINITY
            else:
                self._dist[left] = 0
                queue.append(left)
        self._free_distance = INFINITY
        while queue:
            left = queue.popleft()
            if self._dist[left] >= self._free_distance:
                continue
            for right in self._graph_left[left]:
                other = self._pair_right.get(right)
                if other is None:
                    self._free_distance = min(self._free_distance, self._dist[left] + 1)
                elif self._dist[other] == INFINITY:
                    self._dist[other] = self._dist[left] + 1
                    queue.append(other)
        return self._free_distance != INFINITY

    def _dfs(self, root):
        stack = [(root, iter(self._graph_left[root]))]
        path = []
        while stack:
            left, rights = stack[-1]
            advanced = False
            for right in rights:
                other = self._pair_right.get(right)
                if other is None:
                    if self._dist[left] + 1 == self._free_distance:
                        path.append(right)
                        for (path_left, _), path_right in zip(stack, path):
                            self._pair_left[path_left] = path_right
                            self._pair_right[path_right] = path_left
                        return True
                elif self._dist[other] == self._dist[left] + 1:
                    path.append(right)
                    stack.append((other, iter(self._graph_left[other])))
                    advanced = True
                    break
            if not advanced:
                # Dead end for this phase
                self._dist[left] = INFINITY
                stack.pop()
                if path:
                    path.pop()
        return False


def alternating_reachable(graph_left, matching):
    """Left vertices reachable from unmatched left vertices along alternating paths.

    For a maximum matching the reached set S has every column of N(S) matched
    back into S, so ``|S| - |N(S)|`` equals the number of unmatched rows.
    """
    pair_right = {right: left for left, right in matching.items()}
    reached = [left for left in graph_left if left not in matching]
    seen = set(reached)
    queue = deque(reached)
    while queue:
        left = queue.popleft()
        for right in graph_left[left]:
            other = pair_right.get(right)
            if other is not None and other not in seen:
                seen.add(other)
                queue.append(other)
    return seen
