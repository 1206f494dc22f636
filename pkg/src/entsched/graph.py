"""Undirected simple graphs and the matrix/graph views derived from them."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


class GraphError(ValueError):
    pass


Edge = tuple[int, int]


@dataclass(frozen=True)
class Graph:
    """Nodes are ``0..n-1``; ``edges`` holds normalized ``(i, j)`` pairs with ``i < j``,
    sorted lexicographically, so the position of an edge is its edge id."""

    n: int
    edges: tuple[Edge, ...]
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {e: k for k, e in enumerate(self.edges)})

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.int64)
        for i, j in self.edges:
            a[i, j] = a[j, i] = 1
        a.setflags(write=False)
        return a

    @cached_property
    def degree(self) -> np.ndarray:
        d = self.adjacency.sum(axis=1)
        d.setflags(write=False)
        return d

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        nbrs: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        return tuple(tuple(sorted(x)) for x in nbrs)

    @property
    def max_degree(self) -> int:
        return int(self.degree.max()) if self.n else 0

    def edge_id(self, i: int, j: int) -> int:
        """Edge id of the unordered pair; raises ``KeyError`` if absent."""
        return self._index[(min(i, j), max(i, j))]

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self._index


def build_graph(n: int, edges: Iterable[Sequence[int]]) -> Graph:
    if n < 0:
        raise GraphError(f"node count must be non-negative, got {n}")
    seen: set[Edge] = set()
    for pair in edges:
        i, j = (int(x) for x in pair)
        if not (0 <= i < n and 0 <= j < n):
            raise GraphError(f"edge ({i}, {j}): node id out of range [0, {n})")
        if i == j:
            raise GraphError(f"edge ({i}, {j}): self-loop")
        e = (min(i, j), max(i, j))
        if e in seen:
            raise GraphError(f"edge ({i}, {j}): duplicate of {e}")
        seen.add(e)
    return Graph(n, tuple(sorted(seen)))


def laplacian(g: Graph) -> np.ndarray:
    return np.diag(g.degree) - g.adjacency


def edge_laplacian(n: int, edges: Iterable[Edge]) -> np.ndarray:
    """Laplacian of the subgraph on ``n`` nodes spanned by ``edges``."""
    lap = np.zeros((n, n), dtype=np.int64)
    for i, j in edges:
        lap[i, i] += 1
        lap[j, j] += 1
        lap[i, j] -= 1
        lap[j, i] -= 1
    return lap


def line_graph(g: Graph) -> tuple[Graph, tuple[Edge, ...]]:
    """Line graph of ``g`` plus the edge index (line-graph node k is ``g.edges[k]``)."""
    if g.m == 0:
        raise GraphError("line graph of an edgeless graph is empty")
    incident: list[list[int]] = [[] for _ in range(g.n)]
    for k, (i, j) in enumerate(g.edges):
        incident[i].append(k)
        incident[j].append(k)
    pairs = set()
    for ids in incident:
        for a in range(len(ids)):
            for b in range(a + 1, len(ids)):
                pairs.add((ids[a], ids[b]))
    return build_graph(g.m, pairs), g.edges


def auxiliary_conflict_graph(g: Graph) -> Graph:
    """Base edges plus an edge between every pair of nodes with a common neighbor."""
    pairs = set(g.edges)
    for nbrs in g.neighbors:
        for a in range(len(nbrs)):
            for b in range(a + 1, len(nbrs)):
                pairs.add((nbrs[a], nbrs[b]))
    return build_graph(g.n, pairs)


def is_connected(g: Graph) -> bool:
    if g.n <= 1:
        return True
    seen = [False] * g.n
    seen[0] = True
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for w in g.neighbors[v]:
            if not seen[w]:
                seen[w] = True
                queue.append(w)
    return all(seen)


def relabel(g: Graph, perm: Sequence[int]) -> Graph:
    """Graph with node ``i`` renamed to ``perm[i]``."""
    return build_graph(g.n, [(perm[i], perm[j]) for i, j in g.edges])
