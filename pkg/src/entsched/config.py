"""Experiment configuration files (JSON, ``"schema": 1``, unknown keys rejected)."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from .data import Dataset, load_idx_dataset, make_synthetic_dataset
from .graph import Graph
from .topology import complete_graph, cycle_graph, gnp_graph, kstar_graph, path_graph, read_edge_list, star_graph

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


_TOPOLOGY_KEYS = {
    "kstar": {"k", "n"},
    "gnp": {"n", "prob", "seed"},
    "cycle": {"n"},
    "path": {"n"},
    "star": {"n"},
    "complete": {"n"},
    "edgelist": {"path"},
}
_DATASET_KEYS = {
    "synthetic": ({"classes", "dim", "per_class", "spread"}, {"anisotropy", "seed"}),
    "idx": ({"train_images", "train_labels", "test_images", "test_labels"}, {"num_classes", "limit"}),
}


def _check_keys(obj: dict, required: set, optional: set, where: str) -> None:
    unknown = set(obj) - required - optional
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ConfigError(f"{where}: missing key(s) {sorted(missing)}")


def build_topology(spec: dict, base_dir: Path | None = None) -> Graph:
    kind = spec.get("kind")
    if kind not in _TOPOLOGY_KEYS:
        raise ConfigError(f"topology: unknown kind {kind!r}")
    _check_keys(spec, _TOPOLOGY_KEYS[kind] | {"kind"}, set(), f"topology[{kind}]")
    if kind == "kstar":
        return kstar_graph(int(spec["k"]), int(spec["n"]))
    if kind == "gnp":
        return gnp_graph(int(spec["n"]), float(spec["prob"]), int(spec["seed"]))
    if kind == "edgelist":
        path = Path(spec["path"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return read_edge_list(path)[0]
    maker = {"cycle": cycle_graph, "path": path_graph, "star": star_graph, "complete": complete_graph}[kind]
    return maker(int(spec["n"]))


def parse_topology_flag(text: str) -> dict:
    """``path:3``, ``cycle:6``, ``star:4``, ``complete:5``, ``kstar:2:15``,
    ``gnp:30:0.15:0`` or ``file:edges.txt``."""
    kind, *args = text.split(":")
    try:
        if kind in ("path", "cycle", "star", "complete"):
            (n,) = args
            return {"kind": kind, "n": int(n)}
        if kind == "kstar":
            k, n = args
            return {"kind": "kstar", "k": int(k), "n": int(n)}
        if kind == "gnp":
            n, prob, seed = args
            return {"kind": "gnp", "n": int(n), "prob": float(prob), "seed": int(seed)}
        if kind == "file":
            return {"kind": "edgelist", "path": ":".join(args)}
    except ValueError:
        pass
    raise ConfigError(f"cannot parse topology {text!r}")


def build_datasets(spec: dict, base_dir: Path | None = None) -> tuple[Dataset, Dataset]:
    kind = spec.get("kind")
    if kind not in _DATASET_KEYS:
        raise ConfigError(f"dataset: unknown kind {kind!r}")
    required, optional = _DATASET_KEYS[kind]
    _check_keys(spec, required | {"kind"}, optional, f"dataset[{kind}]")
    if kind == "synthetic":
        return make_synthetic_dataset(
            int(spec["classes"]), int(spec["dim"]), int(spec["per_class"]), float(spec["spread"]),
            int(spec.get("seed", 0)), float(spec.get("anisotropy", 1.0)),
        )

    def resolve(p):
        p = Path(p)
        return base_dir / p if base_dir is not None and not p.is_absolute() else p

    c = int(spec.get("num_classes", 10))
    train = load_idx_dataset(resolve(spec["train_images"]), resolve(spec["train_labels"]), c, "train")
    test = load_idx_dataset(resolve(spec["test_images"]), resolve(spec["test_labels"]), c, "test")
    if "limit" in spec:
        train = train.subset(range(min(int(spec["limit"]), len(train))))
    return train, test


@dataclass
class ExperimentConfig:
    topology: dict
    dataset: dict = field(default_factory=lambda: dict(DESK_DATASET))
    mode: str = "nodes"
    method: str = "entropy"
    budget: Any = "100%"
    lr: float = 0.1
    batch_size: int = 16
    rounds: int = 400
    shards_per_node: int = 1
    l2: float = 1e-3
    model: str = "logistic"
    hidden: int = 64
    expectation: str = "auto"
    seeds: list = field(default_factory=lambda: [0])
    out: str | None = None
    label: str | None = None
    schema: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.schema != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema {self.schema!r} (expected {SCHEMA_VERSION})")
        if not isinstance(self.topology, dict):
            raise ConfigError("topology must be an object with a 'kind'")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if self.mode not in ("links", "nodes"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.method not in ("entropy", "betweenness", "uniform"):
            raise ConfigError(f"unknown method {self.method!r}")
        self.seeds = [int(s) for s in self.seeds]

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(obj) - names
        if unknown:
            raise ConfigError(f"unknown config key(s) {sorted(unknown)}")
        if "schema" not in obj:
            raise ConfigError("config is missing the 'schema' field")
        if "topology" not in obj:
            raise ConfigError("config is missing the 'topology' field")
        return cls(**obj)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            obj = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(obj)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


# Desk-scale stand-in for the MNIST workload.
DESK_DATASET = {
    "kind": "synthetic", "classes": 10, "dim": 20, "per_class": 200,
    "spread": 0.25, "anisotropy": 30.0, "seed": 0,
}
