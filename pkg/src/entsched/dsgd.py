"""Decentralized SGD over randomly scheduled topologies.

Each round: every node takes one mini-batch step on its local data, a set of
parts (matchings or collision-free subsets) is sampled from the schedule, and
the intermediate models are mixed with ``W(k) = I - alpha * L(k)``.
Metrics are taken on the network-average model.
"""
from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import rng
from .data import Dataset, partition_indices
from .graph import Graph, is_connected
from .importance import importance
from .mixing import SpectralReport, optimize_alpha
from .models import make_model
from .partition import Partition, matchings_by_edge_coloring, subsets_by_vertex_coloring
from .schedule import (
    SchedulePolicy,
    expected_laplacian,
    expected_laplacian_gram,
    make_policy,
    parse_budget,
    round_slot_cost,
    sample_active_parts,
    sampled_laplacian,
    silent_policy,
)

log = logging.getLogger(__name__)

DIVERGENCE_FACTOR = 1e3
TRACE_COLUMNS = ("round", "cum_slots", "train_loss", "test_acc", "active_parts", "consensus_dist")
CENTRAL_STREAM = 8


class DivergenceError(RuntimeError):
    pass


@dataclass
class TrainingConfig:
    graph: Graph
    train: Dataset
    test: Dataset
    mode: str = "nodes"
    method: str = "entropy"
    budget: float | str = "100%"
    lr: float = 0.1
    batch_size: int = 16
    rounds: int = 100
    seed: int = 0
    shards_per_node: int = 2
    l2: float = 1e-3
    model: str = "logistic"
    hidden: int = 64
    expectation: str = "auto"

    def __post_init__(self):
        if self.lr < 0:
            raise ValueError(f"learning rate must be non-negative, got {self.lr}")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")
        if self.rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {self.rounds}")
        if self.mode not in ("links", "nodes"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass(frozen=True)
class TraceRecord:
    round: int
    cum_slots: int
    train_loss: float
    test_acc: float
    active_parts: int
    consensus_dist: float


@dataclass
class TrainingTrace:
    records: list[TraceRecord] = field(default_factory=list)
    final_params: Optional[np.ndarray] = None
    policy: Optional[SchedulePolicy] = None
    report: Optional[SpectralReport] = None

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(TRACE_COLUMNS) + "\n")
        for r in self.records:
            buf.write(
                f"{r.round},{r.cum_slots},{r.train_loss!r},{r.test_acc!r},{r.active_parts},{r.consensus_dist!r}\n"
            )
        return buf.getvalue()


def build_partition(g: Graph, mode: str) -> Partition:
    return matchings_by_edge_coloring(g) if mode == "links" else subsets_by_vertex_coloring(g)


def build_policy(g: Graph, mode: str, method: str, budget: float | str) -> SchedulePolicy:
    """Partition, importance scores and waterfilled probabilities for one setting.

    A budget of exactly zero gives the silent policy (no part ever active).
    """
    partition = build_partition(g, mode)
    b = parse_budget(budget, len(partition))
    if b == 0:
        return silent_policy(partition)
    scores = importance(g, method, "nodes" if mode == "nodes" else "edges").scores
    return make_policy(scores, partition, b)


def tune_mixing(g: Graph, policy: SchedulePolicy, method: str = "auto", seed: int = 0) -> SpectralReport:
    el = expected_laplacian(g, policy.partition, policy.probs)
    egram = expected_laplacian_gram(g, policy.partition, policy.probs, method=method, seed=seed)
    return optimize_alpha(el, egram)


def sample_batch(n_local: int, batch_size: int, seed: int, round_index: int, node: int) -> np.ndarray:
    gen = rng.stream(seed, rng.BATCH, round_index, node)
    return gen.choice(n_local, size=min(batch_size, n_local), replace=False)


def local_sgd_step(model, theta: np.ndarray, local: Dataset, lr: float, batch_idx: np.ndarray) -> np.ndarray:
    if lr == 0:
        return theta.copy()
    _, grad = model.loss_grad(theta, local.features[batch_idx], local.labels[batch_idx])
    return theta - lr * grad


class _Evaluator:
    """Global objective ``F(x) = mean_i F_i(x)`` over the node datasets, plus test accuracy."""

    def __init__(self, model, locals_: list[Dataset], test: Dataset):
        self.model = model
        self.test = test
        self.x = np.concatenate([d.features for d in locals_])
        self.y = np.concatenate([d.labels for d in locals_])
        self.w = np.concatenate([np.full(len(d), 1.0 / (len(locals_) * len(d))) for d in locals_])

    def loss(self, theta: np.ndarray) -> float:
        return self.model.loss(theta, self.x, self.y, self.w)

    def accuracy(self, theta: np.ndarray) -> float:
        return float(np.mean(self.model.predict(theta, self.test.features) == self.test.labels))


def _setup(config: TrainingConfig):
    model = make_model(config.model, config.train.num_classes, config.train.dim, config.l2, config.hidden)
    locals_ = [config.train.subset(idx) for idx in
               partition_indices(config.train, config.graph.n, config.shards_per_node, config.seed)]
    theta0 = model.init(rng.stream(config.seed, rng.INIT))
    return model, locals_, theta0


def run_dsgd(
    config: TrainingConfig,
    policy: SchedulePolicy | None = None,
    report: SpectralReport | None = None,
    x0: np.ndarray | None = None,
) -> TrainingTrace:
    """Run D-SGD. ``policy``/``report`` may be passed in to reuse a tuned schedule.

    ``x0`` optionally gives per-node starting parameters, shape ``(n, size)``;
    by default every node starts from the model's seeded init.
    """
    g = config.graph
    if not is_connected(g):
        raise ValueError("training topology must be connected")
    if policy is None:
        policy = build_policy(g, config.mode, config.method, config.budget)
    silent = not np.any(policy.probs > 0)
    if report is None and not silent:
        report = tune_mixing(g, policy, config.expectation, config.seed)
    alpha = report.alpha if report is not None else 0.0

    model, locals_, theta0 = _setup(config)
    evaluator = _Evaluator(model, locals_, config.test)
    if x0 is None:
        x = np.tile(theta0, (g.n, 1))
    else:
        x = np.array(x0, dtype=float)
        if x.shape != (g.n, theta0.size):
            raise ValueError(f"x0 must have shape {(g.n, theta0.size)}, got {x.shape}")
    start_loss = evaluator.loss(x.mean(axis=0))

    trace = TrainingTrace(policy=policy, report=report)
    slots = 0
    for k in range(1, config.rounds + 1):
        for i in range(g.n):
            idx = sample_batch(len(locals_[i]), config.batch_size, config.seed, k, i)
            x[i] = local_sgd_step(model, x[i], locals_[i], config.lr, idx)
        pattern = sample_active_parts(policy, config.seed, k)
        if pattern.active:
            x = x - alpha * (sampled_laplacian(g, policy.partition, pattern) @ x)
        slots += round_slot_cost(pattern, policy.mode)

        mean = x.mean(axis=0)
        loss = evaluator.loss(mean)
        if not np.isfinite(loss) or loss > DIVERGENCE_FACTOR * start_loss:
            raise DivergenceError(
                f"round {k}: loss {loss:.4g} exceeds {DIVERGENCE_FACTOR:g} x initial {start_loss:.4g}; "
                f"lower the learning rate ({config.lr})"
            )
        trace.records.append(TraceRecord(
            k, slots, loss, evaluator.accuracy(mean), len(pattern.active),
            float(np.sum((x - mean) ** 2)),
        ))
    trace.final_params = x
    return trace


def centralized_baseline(config: TrainingConfig) -> TrainingTrace:
    """Single-worker SGD on the pooled training set.

    Runs ``rounds`` steps with mini-batches of ``n * batch_size`` samples, i.e.
    the same number of network-wide gradient steps and samples as D-SGD.
    The loss column uses the same per-node objective as ``run_dsgd``.
    """
    model, locals_, theta = _setup(config)
    evaluator = _Evaluator(model, locals_, config.test)
    pooled = config.train
    batch = config.batch_size * config.graph.n
    trace = TrainingTrace()
    for k in range(1, config.rounds + 1):
        gen = rng.stream(config.seed, CENTRAL_STREAM, k)
        idx = gen.choice(len(pooled), size=min(batch, len(pooled)), replace=False)
        theta = local_sgd_step(model, theta, pooled, config.lr, idx)
        trace.records.append(TraceRecord(k, 0, evaluator.loss(theta), evaluator.accuracy(theta), 0, 0.0))
    trace.final_params = theta[None, :]
    return trace
