"""Exact-arithmetic flow and matching primitives.

Small enough to write directly: desk-scale graphs (tens of nodes) with
Fraction capacities, where scipy/networkx would push us through floats.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from .core import ZERO


@dataclass
class _Edge:
    src: int
    dst: int
    cap: Fraction
    flow: Fraction


class MaxFlow:
    """Edmonds-Karp with exact rational capacities.

    Deterministic: BFS explores edges in insertion order, so identical
    inputs produce identical flows.
    """

    def __init__(self, num_nodes: int) -> None:
        self.num_nodes = num_nodes
        self.edges: list[_Edge] = []
        self.adjacency: list[list[int]] = [[] for _ in range(num_nodes)]

    def add_edge(self, src: int, dst: int, cap: Fraction) -> int:
        """Add a directed edge; returns its id (the reverse edge is id ^ 1)."""
        edge_id = len(self.edges)
        self.edges.append(_Edge(src, dst, Fraction(cap), ZERO))
        self.edges.append(_Edge(dst, src, ZERO, ZERO))
        self.adjacency[src].append(edge_id)
        self.adjacency[dst].append(edge_id + 1)
        return edge_id

    def _residual(self, edge_id: int) -> Fraction:
        return self.edges[edge_id].cap - self.edges[edge_id].flow

    def max_flow(self, source: int, sink: int) -> Fraction:
        total = ZERO
        while True:
            parent_edge = [-1] * self.num_nodes
            parent_edge[source] = -2
            queue = deque([source])
            while queue and parent_edge[sink] == -1:
                node = queue.popleft()
                for edge_id in self.adjacency[node]:
                    edge = self.edges[edge_id]
                    if parent_edge[edge.dst] == -1 and self._residual(edge_id) > 0:
                        parent_edge[edge.dst] = edge_id
                        queue.append(edge.dst)
            if parent_edge[sink] == -1:
                return total
            bottleneck = None
            node = sink
            while node != source:
                edge_id = parent_edge[node]
                res = self._residual(edge_id)
                bottleneck = res if bottleneck is None else min(bottleneck, res)
                node = self.edges[edge_id].src
            assert bottleneck is not None and bottleneck > 0
            node = sink
            while node != source:
                edge_id = parent_edge[node]
                self.edges[edge_id].flow += bottleneck
                self.edges[edge_id ^ 1].flow -= bottleneck
                node = self.edges[edge_id].src
            total += bottleneck

    def flow_on(self, edge_id: int) -> Fraction:
        return self.edges[edge_id].flow

    def can_reach_sink(self, sink: int) -> set[int]:
        """Nodes with a residual path to the sink (reverse BFS over residual edges)."""
        reachable = {sink}
        queue = deque([sink])
        while queue:
            node = queue.popleft()
            for edge_id in self.adjacency[node]:
                # adjacency stores edges leaving `node`; the partner edge
                # (edge_id ^ 1) enters node, so its source u reaches node
                # whenever that entering edge has residual capacity.
                partner = edge_id ^ 1
                u = self.edges[partner].src
                if u not in reachable and self._residual(partner) > 0:
                    reachable.add(u)
                    queue.append(u)
        return reachable


def maximum_bipartite_matching(
    adjacency: list[list[int]], num_right: int
) -> tuple[dict[int, int], dict[int, int]]:
    """Kuhn's algorithm; returns (left->right, right->left) matchings.

    Left nodes are indices into ``adjacency``; candidates are tried in
    list order, so the result is deterministic.
    """
    match_left: dict[int, int] = {}
    match_right: dict[int, int] = {}

    def try_augment(left: int, visited: set[int]) -> bool:
        for right in adjacency[left]:
            if right in visited:
                continue
            visited.add(right)
            if right not in match_right or try_augment(match_right[right], visited):
                match_left[left] = right
                match_right[right] = left
                return True
        return False

    for left in range(len(adjacency)):
        try_augment(left, set())
    return match_left, match_right


def hall_violator(adjacency: list[list[int]], num_right: int) -> list[int] | None:
    """A set of left nodes whose joint neighborhood is smaller than the set.

    Returns None when a perfect matching on the left side exists.
    """
    match_left, match_right = maximum_bipartite_matching(adjacency, num_right)
    unmatched = [u for u in range(len(adjacency)) if u not in match_left]
    if not unmatched:
        return None
    # Alternating reachability from any unmatched left node: the reached
    # left set S has |N(S)| = |S| - 1.
    start = unmatched[0]
    left_seen = {start}
    right_seen: set[int] = set()
    frontier = [start]
    while frontier:
        nxt: list[int] = []
        for u in frontier:
            for v in adjacency[u]:
                if v in right_seen:
                    continue
                right_seen.add(v)
                w = match_right.get(v)
                if w is not None and w not in left_seen:
                    left_seen.add(w)
                    nxt.append(w)
        frontier = nxt
    return sorted(left_seen)


def lexicographically_smallest_perfect_matching(
    adjacency: list[list[int]],
) -> list[int] | None:
    """Perfect matching minimizing (row 0's column, then row 1's, ...).

    Greedy fix of each row to its smallest feasible column, with a
    maximum-matching feasibility probe on the remainder.  None when no
    perfect matching exists.
    """
    size = len(adjacency)
    sorted_adj = [sorted(cols) for cols in adjacency]
    chosen: list[int] = []
    used: set[int] = set()

    def feasible(from_row: int, used_cols: set[int]) -> bool:
        rest = [[c for c in sorted_adj[r] if c not in used_cols] for r in range(from_row, size)]
        match_left, _ = maximum_bipartite_matching(rest, size)
        return len(match_left) == size - from_row

    if not feasible(0, set()):
        return None
    for row in range(size):
        placed = False
        for col in sorted_adj[row]:
            if col in used:
                continue
            used.add(col)
            if feasible(row + 1, used):
                chosen.append(col)
                placed = True
                break
            used.remove(col)
        if not placed:
            return None
    return chosen
