"""Benchmark runner: (task x variant x seed) sweeps with aggregated reports.

Variants toggle exactly one ingredient against the full method: the query
strategy, the ensemble curation, or the exploration loop. Aggregation reports
mean and 95% confidence intervals (normal approximation) over runs. Cost-based
curves are aggregated on a cost-fraction grid using the best recall achievable
within each cost cap, which matches the minimal-cost-to-reach-recall reading
of the per-run tables.

A run that never reaches a recall level within its budget is assigned the
verify-everything completion cost (the full candidate count) when blocking
recall permits reaching that level at all, and is excluded (and counted)
otherwise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .blocking import generate_candidates
from .embeddings import ProviderPair
from .evaluation import (
    RECALL_LEVELS,
    EvaluationReport,
    SimulatedOracle,
    report_from_trace,
)
from .fastloop import FastLoopConfig, MatchEngine
from .metrics import FeatureComputer
from .ontology import MatchTask, load_task_dir
from .synthetic import generate_synthetic_task
from .trace import RunTrace

VARIANTS = ("dualloop", "no-slow-loop", "entropy", "uniform-ensemble")

VARIANT_OVERRIDES: dict[str, dict] = {
    "dualloop": {},
    "no-slow-loop": {"slow_loop": False},
    "entropy": {"strategy": "entropy"},
    "uniform-ensemble": {"ensemble": "uniform"},
}

COST_GRID_STEP = 0.02


@dataclass
class TaskSpec:
    """One benchmark task: a directory or a synthetic recipe."""

    name: str
    path: str | None = None
    n_source: int = 65
    n_target: int = 75
    match_rate: float = 0.006
    noise: float = 0.9

    @classmethod
    def from_dict(cls, data: dict, index: int) -> "TaskSpec":
        if data.get("type") == "dir":
            return cls(name=data.get("name", f"task{index}"), path=data["path"])
        return cls(
            name=data.get("name", f"synthetic{index}"),
            n_source=int(data.get("n_source", 65)),
            n_target=int(data.get("n_target", 75)),
            match_rate=float(data.get("match_rate", 0.006)),
            noise=float(data.get("noise", 0.9)),
        )

    def build(self, seed: int) -> MatchTask:
        if self.path is not None:
            return load_task_dir(self.path)
        return generate_synthetic_task(
            seed=seed,
            n_source=self.n_source,
            n_target=self.n_target,
            match_rate=self.match_rate,
            noise=self.noise,
        )


@dataclass
class BenchConfig:
    tasks: list[TaskSpec]
    seeds: list[int] = field(default_factory=lambda: [1])
    variants: list[str] = field(default_factory=lambda: list(VARIANTS))
    batch_size: int = 10
    budget_fraction: float = 0.25
    budget: int | None = None
    delta: float = 0.02
    concurrent: bool = False

    @classmethod
    def from_file(cls, path: str | Path) -> "BenchConfig":
        data = json.loads(Path(path).read_text())
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "BenchConfig":
        tasks = [TaskSpec.from_dict(t, i) for i, t in enumerate(data.get("tasks", [{}]))]
        unknown = set(data.get("variants", [])) - set(VARIANTS)
        if unknown:
            raise ValueError(f"unknown variants: {sorted(unknown)}")
        return cls(
            tasks=tasks,
            seeds=[int(s) for s in data.get("seeds", [1])],
            variants=list(data.get("variants", VARIANTS)),
            batch_size=int(data.get("batch_size", 10)),
            budget_fraction=float(data.get("budget_fraction", 0.25)),
            budget=data.get("budget"),
            delta=float(data.get("delta", 0.02)),
            concurrent=bool(data.get("concurrent", False)),
        )


@dataclass
class BenchRun:
    task: str
    variant: str
    seed: int
    candidates: int
    blocking_recall: float
    report: EvaluationReport | None
    trace_file: str | None
    error: str | None = None


def mean_ci(values: list[float]) -> dict:
    """Mean with a 95% confidence interval under the normal approximation."""
    count = len(values)
    mean = sum(values) / count if count else 0.0
    if count > 1:
        variance = sum((v - mean) ** 2 for v in values) / (count - 1)
        half = 1.96 * math.sqrt(variance / count)
    else:
        half = 0.0
    return {"mean": mean, "ci_low": mean - half, "ci_high": mean + half, "n": count}


def recall_within_cost(report: EvaluationReport, cost_cap: float) -> float:
    """Best recall achievable at cost <= cap (0 when no boundary qualifies)."""
    values = [r for c, r in report.recall_cost if c <= cost_cap]
    return max(values) if values else 0.0


def run_single(
    spec: TaskSpec,
    variant: str,
    seed: int,
    config: BenchConfig,
    out_dir: Path | None = None,
    shared: dict | None = None,
) -> BenchRun:
    task = spec.build(seed)
    cache_key = (spec.name, seed)
    if shared is not None and cache_key in shared:
        computer, candidates, initial_votes = shared[cache_key]
    else:
        computer = FeatureComputer(ProviderPair.builtin())
        candidates = generate_candidates(task, computer)
        initial_votes = None
    budget = config.budget
    if budget is None:
        budget = max(config.batch_size, int(config.budget_fraction * len(candidates)))
    run_config = FastLoopConfig(
        batch_size=config.batch_size,
        budget=min(budget, len(candidates)),
        seed=seed,
        delta=config.delta,
        record_timing=config.concurrent,
        concurrent_slow_loop=config.concurrent,
        **VARIANT_OVERRIDES[variant],
    )
    trace_file = None
    sink = None
    if out_dir is not None:
        trace_file = f"trace_{spec.name}_{variant}_seed{seed}.jsonl"
        sink = out_dir / trace_file
        if sink.exists():
            sink.unlink()
    try:
        engine = MatchEngine(
            task,
            candidates,
            computer,
            run_config,
            trace=RunTrace(sink) if sink is not None else None,
            initial_votes=initial_votes,
        )
        if shared is not None:
            shared[cache_key] = (computer, candidates, engine.initial_votes)
        trace = engine.run(SimulatedOracle(task.truth))
        report = report_from_trace(trace)
        error = None
    except Exception as exc:  # record the failure, keep the sweep going
        report = None
        error = str(exc)
    return BenchRun(
        task=spec.name,
        variant=variant,
        seed=seed,
        candidates=len(candidates),
        blocking_recall=candidates.report.recall if candidates.report else 1.0,
        report=report,
        trace_file=trace_file,
        error=error,
    )


def aggregate(runs: list[BenchRun]) -> dict:
    """Per-variant curve and cost aggregates over the successful runs."""
    by_variant: dict[str, list[BenchRun]] = {}
    for run in runs:
        if run.report is not None:
            by_variant.setdefault(run.variant, []).append(run)

    fractions = [round(i * COST_GRID_STEP, 4) for i in range(int(1 / COST_GRID_STEP) + 1)]
    summary: dict = {"variants": {}}
    for variant, variant_runs in sorted(by_variant.items()):
        f1_points = {}
        recall_points = {}
        for index, fraction in enumerate(fractions):
            f1_values = []
            recall_values = []
            for run in variant_runs:
                f1_values.append(run.report.f1_curve[index][1])
                recall_values.append(recall_within_cost(run.report, fraction * run.candidates))
            f1_points[str(fraction)] = mean_ci(f1_values)
            recall_points[str(fraction)] = mean_ci(recall_values)

        cost_table = {}
        for level in RECALL_LEVELS:
            costs = []
            unreachable = 0
            completed = 0
            for run in variant_runs:
                cost = run.report.cost_to_recall[level]
                if cost is None:
                    if run.blocking_recall >= level:
                        cost = run.candidates  # verify-everything completion
                        completed += 1
                    else:
                        unreachable += 1
                        continue
                costs.append(float(cost))
            cost_table[str(int(level * 100))] = {
                **mean_ci(costs),
                "completed_runs": completed,
                "unreachable_runs": unreachable,
            }

        summary["variants"][variant] = {
            "runs": len(variant_runs),
            "f1_vs_budget": f1_points,
            "recall_vs_cost_fraction": recall_points,
            "cost_to_recall": cost_table,
            "total_cost": mean_ci([float(r.report.total_cost) for r in variant_runs]),
        }
    summary["failed_runs"] = [
        {"task": r.task, "variant": r.variant, "seed": r.seed, "error": r.error}
        for r in runs
        if r.report is None
    ]
    return summary


def run_benchmark(config: BenchConfig, out_dir: str | Path | None = None) -> tuple[list[BenchRun], dict]:
    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
    runs: list[BenchRun] = []
    shared: dict = {}
    for spec in config.tasks:
        for seed in config.seeds:
            for variant in config.variants:
                runs.append(run_single(spec, variant, seed, config, out_path, shared))
    summary = aggregate(runs)
    if out_path is not None:
        (out_path / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True))
        _write_curves_csv(runs, out_path)
        from .plots import plot_benchmark  # deferred: matplotlib import is slow

        plot_benchmark(summary, out_path)
    return runs, summary


def _write_curves_csv(runs: list[BenchRun], out_path: Path) -> None:
    for run in runs:
        if run.report is None:
            continue
        stem = f"{run.task}_{run.variant}_seed{run.seed}"
        with open(out_path / f"f1_curve_{stem}.csv", "w") as handle:
            handle.write("budget_fraction,f1\n")
            for fraction, value in run.report.f1_curve:
                handle.write(f"{fraction},{value}\n")
        with open(out_path / f"recall_cost_{stem}.csv", "w") as handle:
            handle.write("cost,recall\n")
            for cost, recall in run.report.recall_cost:
                handle.write(f"{cost},{recall}\n")
