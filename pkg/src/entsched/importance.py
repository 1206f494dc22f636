"""Node and link importance scores.

The entropy score of node ``i`` looks at its closed neighborhood ``N_i + {i}``.
Each edge carries self-information ``log2(d_i * d_j)``; each node ``j`` gets the
link sum ``S(j)`` of its incident edges; normalizing ``S`` over the closed
neighborhood gives a distribution whose Shannon entropy (bits) is the score.
Link importance is the node score on the line graph.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .graph import Graph, line_graph

DEFAULT_TIE_TOL = 1e-9


@dataclass(frozen=True)
class ImportanceVector:
    target: Literal["nodes", "edges"]
    scores: np.ndarray
    ranks: np.ndarray

    def to_csv(self) -> str:
        rows = ["element_id,score_bits,rank"]
        rows += [f"{k},{s!r},{r}" for k, (s, r) in enumerate(zip(self.scores.tolist(), self.ranks.tolist()))]
        return "\n".join(rows) + "\n"


def link_self_information(g: Graph, i: int, j: int) -> float:
    if not g.has_edge(i, j):
        raise KeyError(f"({i}, {j}) is not an edge")
    return math.log2(int(g.degree[i]) * int(g.degree[j]))


def node_link_sum(g: Graph, i: int) -> float:
    return sum(link_self_information(g, i, j) for j in g.neighbors[i])


def _link_sums(g: Graph) -> np.ndarray:
    return np.array([node_link_sum(g, i) for i in range(g.n)], dtype=float)


def neighborhood_link_sum(g: Graph, i: int, sums: np.ndarray | None = None) -> float:
    s = _link_sums(g) if sums is None else sums
    return float(s[i] + sum(s[j] for j in g.neighbors[i]))


def node_entropy(g: Graph, i: int, sums: np.ndarray | None = None) -> float:
    """Entropy (bits) of ``P(j) = S(j) / S+(i)`` over the closed neighborhood of ``i``.

    Returns 0 when ``S+(i) = 0`` (every incident edge joins two degree-1 nodes).
    """
    s = _link_sums(g) if sums is None else sums
    closed = (i, *g.neighbors[i])
    total = sum(s[j] for j in closed)
    if total <= 0.0:
        return 0.0
    h = 0.0
    for j in closed:
        pj = s[j] / total
        if pj > 0.0:
            h -= pj * math.log2(pj)
    return max(h, 0.0)


def rank_with_ties(scores: Sequence[float], tol: float = DEFAULT_TIE_TOL) -> np.ndarray:
    """Dense descending ranks (1 = highest).

    Walking the scores from high to low, a score within ``tol`` of the current
    group's first (largest) member joins that group; otherwise it opens a new one.
    """
    values = np.asarray(scores, dtype=float)
    order = sorted(range(len(values)), key=lambda k: (-values[k], k))
    ranks = np.zeros(len(values), dtype=np.int64)
    rank, head = 0, None
    for k in order:
        if head is None or head - values[k] > tol:
            rank += 1
            head = values[k]
        ranks[k] = rank
    return ranks


def node_importance(g: Graph, tol: float = DEFAULT_TIE_TOL) -> ImportanceVector:
    sums = _link_sums(g)
    scores = np.array([node_entropy(g, i, sums) for i in range(g.n)])
    return ImportanceVector("nodes", scores, rank_with_ties(scores, tol))


def link_importance(g: Graph, tol: float = DEFAULT_TIE_TOL) -> ImportanceVector:
    lg, _ = line_graph(g)
    nodes = node_importance(lg, tol)
    return ImportanceVector("edges", nodes.scores, nodes.ranks)


def betweenness_centrality(g: Graph, tol: float = DEFAULT_TIE_TOL) -> ImportanceVector:
    """Unnormalized shortest-path betweenness (Brandes), each unordered pair once."""
    bc = np.zeros(g.n)
    for s in range(g.n):
        stack = []
        preds: list[list[int]] = [[] for _ in range(g.n)]
        sigma = np.zeros(g.n)
        sigma[s] = 1.0
        dist = [-1] * g.n
        dist[s] = 0
        queue = deque([s])
        while queue:
            v = queue.popleft()
            stack.append(v)
            for w in g.neighbors[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = np.zeros(g.n)
        while stack:
            w = stack.pop()
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                bc[w] += delta[w]
    bc /= 2.0
    return ImportanceVector("nodes", bc, rank_with_ties(bc, tol))


def link_betweenness(g: Graph, tol: float = DEFAULT_TIE_TOL) -> ImportanceVector:
    """Betweenness of the line graph, read back as per-edge scores."""
    lg, _ = line_graph(g)
    nodes = betweenness_centrality(lg, tol)
    return ImportanceVector("edges", nodes.scores, nodes.ranks)


def importance(g: Graph, method: str, target: str) -> ImportanceVector:
    """Dispatch on ``method`` in {entropy, betweenness, uniform} and ``target`` in {nodes, edges}."""
    if target not in ("nodes", "edges"):
        raise ValueError(f"unknown importance target {target!r}")
    if method == "entropy":
        return node_importance(g) if target == "nodes" else link_importance(g)
    if method == "betweenness":
        return betweenness_centrality(g) if target == "nodes" else link_betweenness(g)
    if method == "uniform":
        size = g.n if target == "nodes" else g.m
        return ImportanceVector(target, np.ones(size), np.ones(size, dtype=np.int64))
    raise ValueError(f"unknown importance method {method!r}")
