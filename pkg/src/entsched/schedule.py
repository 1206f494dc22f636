"""Budgeted Bernoulli scheduling of matchings / collision-free subsets.

Importance scores become per-element mass ``b`` (sums to 1), per-part mass
``b_S`` (sum over members), and activation probabilities
``p = min(1, kappa * b_S)`` with ``kappa`` set so that ``sum(p) == budget``.
Each round every part is switched on independently with its probability.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from . import rng
from .graph import Graph, edge_laplacian
from .partition import Partition

log = logging.getLogger(__name__)

ENUMERATE_DEFAULT_MAX = 15
ENUMERATE_HARD_MAX = 25
MC_DRAWS = 100_000


class BudgetError(ValueError):
    pass


@dataclass(frozen=True)
class SchedulePolicy:
    partition: Partition
    probs: np.ndarray
    budget: float
    scale: float

    @property
    def mode(self) -> str:
        return self.partition.mode

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "budget": self.budget,
            "scale": self.scale,
            "parts": [list(p) for p in self.partition.parts],
            "probs": [float(x) for x in self.probs],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, obj: dict) -> "SchedulePolicy":
        part = Partition(obj["mode"], tuple(tuple(int(x) for x in p) for p in obj["parts"]))
        return cls(part, np.asarray(obj["probs"], dtype=float), float(obj["budget"]), float(obj["scale"]))


@dataclass(frozen=True)
class ActivationPattern:
    round: int
    active: tuple[int, ...]

    def elements(self, partition: Partition) -> list[int]:
        """Active nodes (nodes mode) or active edge ids (links mode), sorted."""
        return sorted(x for r in self.active for x in partition.parts[r])


def activation_mass(scores: Sequence[float]) -> tuple[np.ndarray, bool]:
    """Normalize non-negative scores to sum 1.

    Returns ``(b, fallback)``; ``fallback`` is True when every score was zero
    and the uniform mass was used instead.
    """
    s = np.asarray(scores, dtype=float)
    if s.size == 0:
        raise ValueError("no scores")
    if not np.all(np.isfinite(s)) or np.any(s < 0):
        raise ValueError("scores must be finite and non-negative")
    total = s.sum()
    if total <= 0.0:
        log.warning("all importance scores are zero; using uniform activation mass")
        return np.full(s.size, 1.0 / s.size), True
    return s / total, False


node_activation_mass = activation_mass


def subset_mass(b: Sequence[float], partition: Partition) -> np.ndarray:
    """Per-part mass: sum of member masses (members are nodes or edge ids)."""
    b = np.asarray(b, dtype=float)
    return np.array([b[list(part)].sum() for part in partition.parts])


def budgeted_probabilities(part_mass: Sequence[float], budget: float) -> tuple[np.ndarray, float]:
    """Waterfill ``p = min(1, kappa * b)`` so that ``sum(p) == budget``.

    Parts whose scaled mass reaches 1 are pinned there and ``kappa`` is
    recomputed on the rest until nothing new clips. Only ratios of
    ``part_mass`` matter. If the budget exceeds the number of parts with
    positive mass, those are all pinned at 1 and the remainder is spread
    evenly over the zero-mass parts.

    Returns ``(p, kappa)`` with ``kappa`` expressed against the normalized mass.
    """
    b = np.asarray(part_mass, dtype=float)
    q = b.size
    if q == 0:
        raise BudgetError("no parts to schedule")
    if not np.all(np.isfinite(b)) or np.any(b < 0):
        raise BudgetError("part mass must be finite and non-negative")
    if not budget > 0:
        raise BudgetError(f"budget must be positive, got {budget}")
    if budget > q * (1 + 1e-12):
        raise BudgetError(f"budget {budget} infeasible with {q} parts")
    budget = min(float(budget), float(q))
    total = b.sum()
    if total <= 0.0:
        b = np.ones(q)
        total = float(q)

    p = np.zeros(q)
    positive = b > 0
    n_pos = int(positive.sum())
    if budget >= n_pos:
        p[positive] = 1.0
        zero = ~positive
        if zero.any():
            p[zero] = (budget - n_pos) / zero.sum()
        with np.errstate(over="ignore"):
            return p, float(total / b[positive].min())

    pinned = np.zeros(q, dtype=bool)
    while True:
        free = positive & ~pinned
        scale = (budget - pinned.sum()) / b[free].sum()
        clip = np.zeros(q, dtype=bool)
        clip[free] = scale * b[free] >= 1.0
        if not clip.any():
            p[free] = scale * b[free]
            with np.errstate(over="ignore"):
                return p, float(scale * total)
        pinned |= clip
        p[clip] = 1.0


def make_policy(scores: Sequence[float], partition: Partition, budget: float) -> SchedulePolicy:
    b, _ = activation_mass(scores)
    probs, scale = budgeted_probabilities(subset_mass(b, partition), budget)
    return SchedulePolicy(partition, probs, float(budget), scale)


def silent_policy(partition: Partition) -> SchedulePolicy:
    """Zero-budget policy: no part is ever active."""
    return SchedulePolicy(partition, np.zeros(len(partition)), 0.0, 0.0)


def parse_budget(text: str | float, n_parts: int) -> float:
    """Absolute slot count, or a percentage of ``n_parts`` when suffixed with ``%``."""
    if isinstance(text, str) and text.strip().endswith("%"):
        return float(text.strip()[:-1]) / 100.0 * n_parts
    return float(text)


def sample_active_parts(policy: SchedulePolicy, seed: int, round_index: int) -> ActivationPattern:
    z = rng.stream(seed, rng.SCHEDULE, round_index).random(len(policy.probs)) < policy.probs
    return ActivationPattern(round_index, tuple(int(r) for r in np.flatnonzero(z)))


def round_slot_cost(pattern: ActivationPattern, mode: str) -> int:
    """One slot per active subset; two per active matching (send + receive)."""
    if mode == "nodes":
        return len(pattern.active)
    if mode == "links":
        return 2 * len(pattern.active)
    raise ValueError(f"unknown mode {mode!r}")


# --- Laplacians of sampled topologies ---------------------------------------

def _node_mask(partition: Partition, active_parts: Sequence[int], n: int) -> np.ndarray:
    mask = np.zeros(n)
    for r in active_parts:
        mask[list(partition.parts[r])] = 1.0
    return mask


def laplacian_from_node_mask(adjacency: np.ndarray, mask: np.ndarray) -> np.ndarray:
    a_hat = mask[:, None] * adjacency * mask[None, :]
    return np.diag(a_hat.sum(axis=1)) - a_hat


def sampled_laplacian_nodes(g: Graph, partition: Partition, pattern: ActivationPattern) -> np.ndarray:
    if partition.mode != "nodes":
        raise ValueError("sampled_laplacian_nodes needs a nodes-mode partition")
    return laplacian_from_node_mask(g.adjacency.astype(float), _node_mask(partition, pattern.active, g.n))


def matching_laplacians(g: Graph, partition: Partition) -> np.ndarray:
    """Stack of per-matching Laplacians, shape ``(M, n, n)``."""
    if partition.mode != "links":
        raise ValueError("matching_laplacians needs a links-mode partition")
    return np.stack([edge_laplacian(g.n, [g.edges[e] for e in part]) for part in partition.parts]).astype(float)


def sampled_laplacian_links(g: Graph, partition: Partition, pattern: ActivationPattern) -> np.ndarray:
    if partition.mode != "links":
        raise ValueError("sampled_laplacian_links needs a links-mode partition")
    edges = [g.edges[e] for r in pattern.active for e in partition.parts[r]]
    return edge_laplacian(g.n, edges).astype(float)


def sampled_laplacian(g: Graph, partition: Partition, pattern: ActivationPattern) -> np.ndarray:
    if partition.mode == "nodes":
        return sampled_laplacian_nodes(g, partition, pattern)
    return sampled_laplacian_links(g, partition, pattern)


def _batch_laplacians(g: Graph, partition: Partition, z: np.ndarray) -> np.ndarray:
    """Laplacians for a batch of part-activation rows ``z`` (shape ``(B, q)``)."""
    z = z.astype(float)
    if partition.mode == "links":
        return np.einsum("bq,qij->bij", z, matching_laplacians(g, partition))
    member = np.zeros((len(partition), g.n))
    for r, part in enumerate(partition.parts):
        member[r, list(part)] = 1.0
    mask = z @ member
    a_hat = mask[:, :, None] * g.adjacency.astype(float)[None] * mask[:, None, :]
    lap = -a_hat
    idx = np.arange(g.n)
    lap[:, idx, idx] += a_hat.sum(axis=2)
    return lap


# --- expectations ------------------------------------------------------------

def pattern_distribution(probs: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """All ``2**q`` activation rows with their probabilities."""
    p = np.asarray(probs, dtype=float)
    q = p.size
    if q > ENUMERATE_HARD_MAX:
        raise ValueError(f"refusing to enumerate 2**{q} activation patterns (limit q <= {ENUMERATE_HARD_MAX})")
    codes = np.arange(2**q, dtype=np.int64)
    z = ((codes[:, None] >> np.arange(q)[None, :]) & 1).astype(bool)
    weights = np.where(z, p[None, :], 1.0 - p[None, :]).prod(axis=1)
    return z, weights


def _joint_activation(owner: list[int], probs: np.ndarray, nodes: Sequence[int]) -> float:
    """Probability that every node in ``nodes`` is active."""
    out = 1.0
    for r in {owner[i] for i in nodes}:
        out *= probs[r]
    return out


def expected_laplacian(g: Graph, partition: Partition, probs: Sequence[float]) -> np.ndarray:
    p = np.asarray(probs, dtype=float)
    if partition.mode == "links":
        return np.einsum("q,qij->ij", p, matching_laplacians(g, partition))
    owner = partition.node_to_part(g.n)
    a_exp = np.zeros((g.n, g.n))
    for i, j in g.edges:
        a_exp[i, j] = a_exp[j, i] = _joint_activation(owner, p, (i, j))
    return np.diag(a_exp.sum(axis=1)) - a_exp


def _gram_closed_links(g: Graph, partition: Partition, p: np.ndarray) -> np.ndarray:
    lj = matching_laplacians(g, partition)
    el = np.einsum("q,qij->ij", p, lj)
    squares = np.einsum("qij,qjk->qik", lj, lj)
    return el @ el + np.einsum("q,qij->ij", p - p * p, squares)


def _gram_closed_nodes(g: Graph, partition: Partition, p: np.ndarray) -> np.ndarray:
    # Expand L^2 = D^2 - DA - AD + A^2 entrywise; every term is a product of
    # node activations, whose expectation is the product over the distinct
    # parts involved.
    owner = partition.node_to_part(g.n)
    nb = g.neighbors
    m = lambda *nodes: _joint_activation(owner, p, nodes)  # noqa: E731
    gram = np.zeros((g.n, g.n))
    for a in range(g.n):
        gram[a, a] = sum(m(a, j, l) for j in nb[a] for l in nb[a]) + sum(m(a, c) for c in nb[a])
    for a, b in combinations(range(g.n), 2):
        val = 0.0
        if g.has_edge(a, b):
            val -= sum(m(a, b, j) for j in nb[a]) + sum(m(a, b, j) for j in nb[b])
        for c in set(nb[a]) & set(nb[b]):
            val += m(a, b, c)
        gram[a, b] = gram[b, a] = val
    return gram


def _gram_enumerate(g: Graph, partition: Partition, p: np.ndarray, chunk: int = 2048) -> np.ndarray:
    z, w = pattern_distribution(p)
    gram = np.zeros((g.n, g.n))
    for lo in range(0, len(w), chunk):
        laps = _batch_laplacians(g, partition, z[lo:lo + chunk])
        gram += np.einsum("b,bij,bjk->ik", w[lo:lo + chunk], laps, laps)
    return gram


@dataclass(frozen=True)
class MonteCarloMoments:
    mean_laplacian: np.ndarray
    mean_gram: np.ndarray
    stderr_laplacian: np.ndarray
    stderr_gram: np.ndarray
    draws: int


def monte_carlo_moments(
    g: Graph, partition: Partition, probs: Sequence[float], draws: int = MC_DRAWS, seed: int = 0, chunk: int = 4096
) -> MonteCarloMoments:
    """Sample means (and standard errors) of ``L`` and ``L^T L`` over seeded patterns."""
    p = np.asarray(probs, dtype=float)
    gen = rng.stream(seed, rng.EXPECTATION)
    s1 = np.zeros((g.n, g.n))
    s2 = np.zeros((g.n, g.n))
    t1 = np.zeros((g.n, g.n))
    t2 = np.zeros((g.n, g.n))
    done = 0
    while done < draws:
        size = min(chunk, draws - done)
        z = gen.random((size, p.size)) < p[None, :]
        laps = _batch_laplacians(g, partition, z)
        grams = np.einsum("bji,bjk->bik", laps, laps)
        s1 += laps.sum(axis=0)
        s2 += (laps * laps).sum(axis=0)
        t1 += grams.sum(axis=0)
        t2 += (grams * grams).sum(axis=0)
        done += size

    def mean_se(a, b):
        mean = a / draws
        var = np.maximum(b / draws - mean * mean, 0.0) * draws / max(draws - 1, 1)
        return mean, np.sqrt(var / draws)

    ml, sl = mean_se(s1, s2)
    mg, sg = mean_se(t1, t2)
    return MonteCarloMoments(ml, mg, sl, sg, draws)


def expected_laplacian_gram(
    g: Graph,
    partition: Partition,
    probs: Sequence[float],
    method: str = "auto",
    draws: int = MC_DRAWS,
    seed: int = 0,
) -> np.ndarray:
    """``E[L^T L]`` of the sampled Laplacian.

    ``method``: ``enumerate`` (exact sum over all patterns, q <= 25),
    ``montecarlo`` (seeded sample mean), ``closed`` (exact moment expansion)
    or ``auto`` (closed form in links mode; enumeration up to 15 parts,
    closed form beyond, in nodes mode).
    """
    p = np.asarray(probs, dtype=float)
    if method == "auto":
        if partition.mode == "links":
            method = "closed"
        else:
            method = "enumerate" if p.size <= ENUMERATE_DEFAULT_MAX else "closed"
    if method == "enumerate":
        return _gram_enumerate(g, partition, p)
    if method == "montecarlo":
        return monte_carlo_moments(g, partition, p, draws, seed).mean_gram
    if method == "closed":
        if partition.mode == "links":
            return _gram_closed_links(g, partition, p)
        return _gram_closed_nodes(g, partition, p)
    raise ValueError(f"unknown expectation method {method!r}")
