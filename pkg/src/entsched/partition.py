"""Decomposition of a topology into link matchings or collision-free node subsets.

Links mode: a proper edge coloring (Misra-Gries, at most ``max_degree + 1``
colors); each color class is a matching whose exchanges run in parallel.

Nodes mode: a greedy proper coloring of the auxiliary conflict graph; each
color class is a set of nodes that can broadcast in the same slot.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Literal

from .graph import Graph, auxiliary_conflict_graph

Mode = Literal["links", "nodes"]


@dataclass(frozen=True)
class Partition:
    mode: Mode
    parts: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.mode not in ("links", "nodes"):
            raise ValueError(f"unknown partition mode {self.mode!r}")

    def __len__(self) -> int:
        return len(self.parts)

    def node_to_part(self, n: int) -> list[int]:
        """Part index of every node (nodes mode only)."""
        if self.mode != "nodes":
            raise ValueError("node_to_part needs a nodes-mode partition")
        owner = [-1] * n
        for r, part in enumerate(self.parts):
            for i in part:
                owner[i] = r
        return owner

    def to_json(self) -> str:
        return json.dumps({"mode": self.mode, "parts": [list(p) for p in self.parts]})

    @classmethod
    def from_json(cls, text: str) -> "Partition":
        obj = json.loads(text)
        return cls(obj["mode"], tuple(tuple(int(x) for x in p) for p in obj["parts"]))


def _from_colors(mode: Mode, colors: list[int]) -> Partition:
    classes: dict[int, list[int]] = {}
    for element, c in enumerate(colors):
        classes.setdefault(c, []).append(element)
    return Partition(mode, tuple(tuple(classes[c]) for c in sorted(classes)))


class _EdgeColoring:
    """Mutable state for Misra-Gries; ``at[v][c]`` is the neighbor joined to ``v``
    by the edge of color ``c``."""

    def __init__(self, g: Graph):
        self.g = g
        self.palette = range(g.max_degree + 1)
        self.at: list[dict[int, int]] = [{} for _ in range(g.n)]
        self.color: dict[tuple[int, int], int] = {}

    def get(self, a: int, b: int):
        return self.color.get((min(a, b), max(a, b)))

    def free(self, v: int, c: int) -> bool:
        return c not in self.at[v]

    def first_free(self, v: int) -> int:
        return next(c for c in self.palette if c not in self.at[v])

    def uncolor(self, a: int, b: int) -> None:
        c = self.color.pop((min(a, b), max(a, b)), None)
        if c is not None:
            del self.at[a][c]
            del self.at[b][c]

    def paint(self, a: int, b: int, c: int) -> None:
        self.uncolor(a, b)
        assert self.free(a, c) and self.free(b, c), (a, b, c)
        self.color[(min(a, b), max(a, b))] = c
        self.at[a][c] = b
        self.at[b][c] = a

    def is_fan(self, u: int, fan: list[int]) -> bool:
        for prev, cur in zip(fan, fan[1:]):
            c = self.get(u, cur)
            if c is None or not self.free(prev, c):
                return False
        return True

    def maximal_fan(self, u: int, v: int) -> list[int]:
        fan = [v]
        in_fan = {v}
        grown = True
        while grown:
            grown = False
            for w in self.g.neighbors[u]:
                if w in in_fan:
                    continue
                c = self.get(u, w)
                if c is not None and self.free(fan[-1], c):
                    fan.append(w)
                    in_fan.add(w)
                    grown = True
                    break
        return fan

    def invert_path(self, u: int, c: int, d: int) -> None:
        """Swap colors c and d along the maximal c/d alternating path leaving ``u``
        (``c`` is free on ``u``, so the path starts with a ``d`` edge)."""
        path = []
        x, cur, other = u, d, c
        while cur in self.at[x]:
            y = self.at[x][cur]
            path.append((x, y, other))
            x, cur, other = y, other, cur
        for a, b, _ in path:
            self.uncolor(a, b)
        for a, b, new in path:
            self.paint(a, b, new)

    def color_edge(self, u: int, v: int) -> None:
        fan = self.maximal_fan(u, v)
        c = self.first_free(u)
        d = self.first_free(fan[-1])
        self.invert_path(u, c, d)
        for k, w in enumerate(fan):
            if self.free(w, d) and self.is_fan(u, fan[: k + 1]):
                prefix = fan[: k + 1]
                break
        else:  # pragma: no cover - excluded by the Misra-Gries lemma
            raise AssertionError(f"no rotatable fan prefix at edge ({u}, {v})")
        shifted = [self.get(u, w) for w in prefix[1:]]
        for w in prefix:
            self.uncolor(u, w)
        for w, col in zip(prefix, shifted):
            self.paint(u, w, col)
        self.paint(u, prefix[-1], d)


def matchings_by_edge_coloring(g: Graph) -> Partition:
    """Split the edges of ``g`` into at most ``max_degree + 1`` matchings.

    Parts hold edge ids (positions in ``g.edges``), ordered by color.
    """
    if g.m == 0:
        raise ValueError("cannot decompose an edgeless graph into matchings")
    state = _EdgeColoring(g)
    for u, v in g.edges:
        state.color_edge(u, v)
    return _from_colors("links", [state.color[e] for e in g.edges])


def greedy_coloring(g: Graph) -> list[int]:
    """Smallest-available-color greedy, visiting nodes by descending degree
    (ties by node id)."""
    order = sorted(range(g.n), key=lambda v: (-int(g.degree[v]), v))
    colors = [-1] * g.n
    for v in order:
        taken = {colors[w] for w in g.neighbors[v]}
        c = 0
        while c in taken:
            c += 1
        colors[v] = c
    return colors


def subsets_by_vertex_coloring(g: Graph) -> Partition:
    """Collision-free node subsets: color classes of the auxiliary conflict graph."""
    return _from_colors("nodes", greedy_coloring(auxiliary_conflict_graph(g)))


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        return "valid" if self.valid else "; ".join(self.violations)


def validate_partition(g: Graph, p: Partition) -> ValidationReport:
    report = ValidationReport()
    universe = g.m if p.mode == "links" else g.n
    kind = "edge" if p.mode == "links" else "node"
    owner: dict[int, int] = {}
    for r, part in enumerate(p.parts):
        if not part:
            report.violations.append(f"part {r} is empty")
        for x in part:
            if not 0 <= x < universe:
                report.violations.append(f"{kind} id {x} in part {r} out of range")
            elif x in owner:
                report.violations.append(f"{kind} {x} in parts {owner[x]} and {r}")
            else:
                owner[x] = r
    for x in range(universe):
        if x not in owner:
            report.violations.append(f"{kind} {x} not covered")

    for r, part in enumerate(p.parts):
        members = [x for x in part if 0 <= x < universe]
        if p.mode == "links":
            touched: dict[int, int] = {}
            for eid in members:
                for v in g.edges[eid]:
                    if v in touched:
                        report.violations.append(
                            f"shared endpoint {v} in part {r}: edges "
                            f"{g.edges[touched[v]]} and {g.edges[eid]}"
                        )
                    else:
                        touched[v] = eid
        else:
            for a in range(len(members)):
                for b in range(a + 1, len(members)):
                    i, j = sorted((members[a], members[b]))
                    if g.has_edge(i, j):
                        report.violations.append(f"adjacent pair ({i},{j}) in part {r}")
                    common = sorted(set(g.neighbors[i]) & set(g.neighbors[j]))
                    for c in common:
                        report.violations.append(
                            f"common neighbor {c} for pair ({i},{j}) in part {r}"
                        )
    return report
