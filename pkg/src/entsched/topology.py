"""Topology generators and the edge-list text format."""
from __future__ import annotations

from pathlib import Path

from . import rng
from .graph import Graph, GraphError, build_graph, is_connected


def path_graph(n: int) -> Graph:
    return build_graph(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise GraphError(f"cycle needs at least 3 nodes, got {n}")
    return build_graph(n, [(i, (i + 1) % n) for i in range(n)])


def star_graph(n: int) -> Graph:
    """Hub 0 joined to leaves ``1..n-1``."""
    return build_graph(n, [(0, i) for i in range(1, n)])


def complete_graph(n: int) -> Graph:
    return build_graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def kstar_graph(k: int, n: int) -> Graph:
    """``k`` hubs joined in a ring, the remaining ``n - k`` nodes dealt round-robin
    to the hubs as leaves (at most ``ceil((n - k) / k)`` per hub).

    Hubs are nodes ``0..k-1``.
    """
    if k < 1 or n < k:
        raise GraphError(f"kstar needs 1 <= k <= n, got k={k}, n={n}")
    edges = []
    if k == 2:
        edges.append((0, 1))
    elif k > 2:
        edges.extend((h, (h + 1) % k) for h in range(k))
    for leaf in range(k, n):
        edges.append(((leaf - k) % k, leaf))
    return build_graph(n, edges)


def gnp_graph(n: int, prob: float, seed: int, max_tries: int = 1000) -> Graph:
    """Connected Erdos-Renyi sample; redraws (keyed by attempt) until connected."""
    if not 0.0 < prob <= 1.0:
        raise GraphError(f"edge probability must be in (0, 1], got {prob}")
    for attempt in range(max_tries):
        gen = rng.stream(seed, rng.TOPOLOGY, attempt)
        draws = gen.random((n, n))
        edges = [(i, j) for i in range(n) for j in range(i + 1, n) if draws[i, j] < prob]
        g = build_graph(n, edges)
        if is_connected(g):
            return g
    raise GraphError(f"no connected G({n}, {prob}) sample in {max_tries} attempts")


def read_edge_list(path: str | Path, remap: bool = False) -> tuple[Graph, dict[int, int]]:
    """Parse the edge-list format: one ``i j`` pair per line, ``#`` comments,
    optional ``n=<int>`` header.

    Returns the graph and the label mapping (identity unless ``remap`` is set,
    in which case the labels present are compacted to ``0..n-1`` in sorted order).
    """
    n_header = None
    pairs = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("n="):
            n_header = int(line[2:])
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphError(f"{path}:{lineno}: expected two node ids, got {line!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphError(f"{path}:{lineno}: non-integer node id in {line!r}") from None
        if i < 0 or j < 0:
            raise GraphError(f"{path}:{lineno}: negative node id in {line!r}")
        pairs.append((i, j))
    labels = sorted({x for p in pairs for x in p})
    if remap:
        mapping = {lab: k for k, lab in enumerate(labels)}
        n = len(labels) if n_header is None else n_header
    else:
        n = (labels[-1] + 1 if labels else 0) if n_header is None else n_header
        mapping = {k: k for k in range(n)}
    return build_graph(n, [(mapping[i], mapping[j]) for i, j in pairs]), mapping


def write_edge_list(g: Graph, path: str | Path) -> None:
    lines = [f"n={g.n}"] + [f"{i} {j}" for i, j in g.edges]
    Path(path).write_text("\n".join(lines) + "\n")
