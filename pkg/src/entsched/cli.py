"""Command-line driver: partition | importance | optimize | simulate | compare."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

from .config import ConfigError, ExperimentConfig, build_datasets, build_topology, parse_topology_flag
from .dsgd import DivergenceError, TrainingConfig, build_partition, build_policy, run_dsgd, tune_mixing
from .graph import GraphError, is_connected
from .importance import importance
from .partition import validate_partition
from .report import DEFAULT_THRESHOLDS, TraceFormatError, compare_traces, load_trace_sets
from .schedule import BudgetError, parse_budget

log = logging.getLogger("entsched")


def _out_dir(cfg: ExperimentConfig, out: str | None) -> Path:
    path = Path(out or cfg.out or ".")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _graph(cfg: ExperimentConfig, base_dir: Path | None = None):
    g = build_topology(cfg.topology, base_dir)
    if not is_connected(g):
        raise GraphError("topology is not connected")
    return g


def cmd_partition(cfg: ExperimentConfig, out: str | None = None, base_dir: Path | None = None) -> dict:
    g = _graph(cfg, base_dir)
    dest = _out_dir(cfg, out)
    result = {}
    for mode in ("nodes", "links"):
        part = build_partition(g, mode)
        report = validate_partition(g, part)
        (dest / f"partition_{mode}.json").write_text(part.to_json() + "\n")
        result[mode] = {"partition": part, "validation": str(report)}
    result["q"] = len(result["nodes"]["partition"])
    result["M"] = len(result["links"]["partition"])
    summary = {"q": result["q"], "M": result["M"],
               "nodes_validation": result["nodes"]["validation"],
               "links_validation": result["links"]["validation"]}
    (dest / "partition_report.json").write_text(json.dumps(summary, indent=2) + "\n")
    return result


def cmd_importance(cfg: ExperimentConfig, method: str, target: str | None = None,
                   out: str | None = None, base_dir: Path | None = None) -> str:
    if method not in ("entropy", "betweenness", "uniform"):
        raise ConfigError(f"unknown importance method {method!r}")
    g = _graph(cfg, base_dir)
    target = target or ("nodes" if cfg.mode == "nodes" else "edges")
    text = importance(g, method, target).to_csv()
    (_out_dir(cfg, out) / f"importance_{method}_{target}.csv").write_text(text)
    return text


def cmd_optimize(cfg: ExperimentConfig, out: str | None = None, base_dir: Path | None = None):
    g = _graph(cfg, base_dir)
    n_parts = len(build_partition(g, cfg.mode))
    if not parse_budget(cfg.budget, n_parts) > 0:
        raise BudgetError(f"budget must be positive, got {cfg.budget!r}")
    policy = build_policy(g, cfg.mode, cfg.method, cfg.budget)
    report = tune_mixing(g, policy, cfg.expectation, cfg.seeds[0])
    dest = _out_dir(cfg, out)
    (dest / "policy.json").write_text(policy.to_json() + "\n")
    (dest / "spectral.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    return policy, report


def _training_config(cfg: ExperimentConfig, seed: int, g, train, test) -> TrainingConfig:
    return TrainingConfig(
        graph=g, train=train, test=test, mode=cfg.mode, method=cfg.method, budget=cfg.budget,
        lr=cfg.lr, batch_size=cfg.batch_size, rounds=cfg.rounds, seed=seed,
        shards_per_node=cfg.shards_per_node, l2=cfg.l2, model=cfg.model, hidden=cfg.hidden,
        expectation=cfg.expectation,
    )


def _simulate_one(job) -> tuple[int, str]:
    cfg, seed, g, train, test, policy, report = job
    trace = run_dsgd(_training_config(cfg, seed, g, train, test), policy, report)
    return seed, trace.to_csv()


def cmd_simulate(cfg: ExperimentConfig, out: str | None = None, jobs: int = 1,
                 base_dir: Path | None = None) -> list[Path]:
    g = _graph(cfg, base_dir)
    train, test = build_datasets(cfg.dataset, base_dir)
    policy = build_policy(g, cfg.mode, cfg.method, cfg.budget)
    report = None
    if policy.probs.any():
        report = tune_mixing(g, policy, cfg.expectation, cfg.seeds[0])
    dest = _out_dir(cfg, out)
    (dest / "config.json").write_text(cfg.to_json() + "\n")
    work = [(cfg, s, g, train, test, policy, report) for s in cfg.seeds]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_simulate_one, work))
    else:
        results = [_simulate_one(w) for w in work]
    paths = []
    for seed, text in results:
        path = dest / f"trace_seed{seed}.csv"
        path.write_text(text)
        paths.append(path)
    return paths


def cmd_compare(specs: Sequence[str], thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
                out: str | None = None):
    if len(specs) < 2:
        raise ConfigError("compare needs at least two trace sets")
    report = compare_traces(load_trace_sets(specs), thresholds)
    if out:
        dest = Path(out)
        dest.mkdir(parents=True, exist_ok=True)
        (dest / "comparison.csv").write_text(report.to_csv())
    return report


def _load(args) -> tuple[ExperimentConfig, Path | None]:
    base_dir = None
    if args.config:
        cfg = ExperimentConfig.load(args.config)
        base_dir = Path(args.config).resolve().parent
    elif args.topology:
        cfg = ExperimentConfig(topology=parse_topology_flag(args.topology))
    else:
        raise ConfigError("give --config or --topology")
    if args.topology and args.config:
        cfg.topology = parse_topology_flag(args.topology)
    if args.budget is not None:
        cfg.budget = args.budget
    if args.mode is not None:
        cfg.mode = args.mode
    if args.method is not None:
        cfg.method = args.method
    if args.seeds is not None:
        cfg.seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
        if not cfg.seeds:
            raise ConfigError("--seeds is empty")
    return cfg, base_dir


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="entsched", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="experiment JSON")
        p.add_argument("--topology", help="e.g. path:3, cycle:6, kstar:2:15, gnp:30:0.15:0, file:edges.txt")
        p.add_argument("--out", help="output directory")
        p.add_argument("--budget", help="slots per round, or percent of parts with a '%%' suffix")
        p.add_argument("--mode", choices=("links", "nodes"))
        p.add_argument("--method", choices=("entropy", "betweenness", "uniform"))
        p.add_argument("--seeds", help="comma-separated seed list")

    common(sub.add_parser("partition", help="matchings and collision-free subsets"))
    p = sub.add_parser("importance", help="per-node or per-edge importance CSV")
    common(p)
    p.add_argument("--target", choices=("nodes", "edges"))
    common(sub.add_parser("optimize", help="scheduling probabilities and mixing weight"))
    p = sub.add_parser("simulate", help="run D-SGD, one trace CSV per seed")
    common(p)
    p.add_argument("--jobs", type=int, default=1)
    p = sub.add_parser("compare", help="slots-to-accuracy table across trace sets")
    p.add_argument("traces", nargs="+", help="label=glob (or glob) per method")
    p.add_argument("--thresholds", default=",".join(str(t) for t in DEFAULT_THRESHOLDS))
    p.add_argument("--out")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "compare":
            thresholds = [float(t) for t in args.thresholds.split(",")]
            report = cmd_compare(args.traces, thresholds, args.out)
            sys.stdout.write(report.to_csv())
            return 0
        cfg, base_dir = _load(args)
        if args.command == "partition":
            res = cmd_partition(cfg, args.out, base_dir)
            print(f"q={res['q']} M={res['M']}")
            print(f"nodes: {[list(p) for p in res['nodes']['partition'].parts]} ({res['nodes']['validation']})")
            print(f"links: {[list(p) for p in res['links']['partition'].parts]} ({res['links']['validation']})")
        elif args.command == "importance":
            sys.stdout.write(cmd_importance(cfg, cfg.method, args.target, args.out, base_dir))
        elif args.command == "optimize":
            policy, report = cmd_optimize(cfg, args.out, base_dir)
            print(f"parts={len(policy.probs)} budget={policy.budget:g} kappa={policy.scale:.6g}")
            print(f"alpha*={report.alpha:.6f} s*={report.objective:.6f} "
                  f"rho(E[W]-J)={report.deviation:.6f} convergent={report.convergent}")
        elif args.command == "simulate":
            for path in cmd_simulate(cfg, args.out, args.jobs, base_dir):
                print(path)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, GraphError, BudgetError, TraceFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
