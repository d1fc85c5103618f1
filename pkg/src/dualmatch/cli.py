"""Command-line interface.

Subcommands cover the full pipeline: blocking a task directory, driving a
matching run against the simulated oracle (or interactively on the terminal),
benchmark sweeps with aggregated reports and figures, regenerating reports
from a recorded trace, generating synthetic tasks, and serving the HTTP
session service.
"""

from __future__ import annotations

import json
from pathlib import Path

import click

from .blocking import generate_candidates
from .embeddings import ProviderPair
from .evaluation import SimulatedOracle, report_from_trace
from .fastloop import FastLoopConfig, run_fast_loop
from .labeling import SynonymLexicon
from .metrics import FeatureComputer
from .ontology import load_task_dir, save_task_dir
from .synthetic import generate_synthetic_task
from .trace import RunTrace


class ConsoleOracle:
    """Interactive oracle: asks the terminal user to confirm each pair."""

    def __init__(self, task):
        self.task = task

    def answer(self, pair_id) -> int:
        source = self.task.source.get(pair_id[0])
        target = self.task.target.get(pair_id[1])
        click.echo(f"\n  source: {source.name}  [{source.label}] {source.comment[:80]}")
        click.echo(f"  target: {target.name}  [{target.label}] {target.comment[:80]}")
        return 1 if click.confirm("  match?", default=False) else 0


@click.group()
def main():
    """Interactive ontology matching with a two-loop active learner."""


@main.command()
@click.option("--task", "task_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_file", required=True, type=click.Path(dir_okay=False))
def block(task_dir, out_file):
    """Generate the blocked candidate set with provenance and the recall report."""
    task = load_task_dir(task_dir)
    computer = FeatureComputer(ProviderPair.from_task_dir(task_dir))
    candidates = generate_candidates(task, computer)
    payload = {
        "candidates": [
            {
                "source": pair.source_iri,
                "target": pair.target_iri,
                "admitted_by": candidates.provenance[pair.pair_id],
            }
            for pair in candidates
        ],
    }
    if candidates.report is not None:
        payload["blocking_recall"] = {
            "truth_total": candidates.report.truth_total,
            "admitted": candidates.report.admitted,
            "recall": candidates.report.recall,
            "missed": [list(p) for p in candidates.report.missed],
        }
    Path(out_file).write_text(json.dumps(payload, indent=1))
    click.echo(f"{len(candidates)} candidates -> {out_file}")
    if candidates.report is not None:
        click.echo(f"blocking recall {candidates.report.recall:.4f} "
                   f"({candidates.report.admitted}/{candidates.report.truth_total})")


@main.command()
@click.option("--task", "task_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--oracle", type=click.Choice(["simulated", "session"]), default="simulated")
@click.option("--budget", type=int, default=None, help="max annotations (default: all candidates)")
@click.option("--batch", "batch_size", type=int, default=10)
@click.option("--strategy", type=click.Choice(["dualloop", "entropy"]), default="dualloop")
@click.option("--ensemble", type=click.Choice(["curated", "uniform"]), default="curated")
@click.option("--slow-loop", type=click.Choice(["on", "off"]), default="on")
@click.option("--seed", type=int, default=0)
@click.option("--trace", "trace_file", required=True, type=click.Path(dir_okay=False))
@click.option("--timing/--no-timing", default=False, help="record response times (concurrent slow loop)")
@click.option("--lexicon", "lexicon_file", default=None, type=click.Path(exists=True, dir_okay=False),
              help="synonym lexicon JSON (default: synonyms.json in the task dir, if present)")
def run(task_dir, oracle, budget, batch_size, strategy, ensemble, slow_loop, seed, trace_file, timing, lexicon_file):
    """Drive a full matching run and record the trace."""
    task = load_task_dir(task_dir)
    config = FastLoopConfig(
        batch_size=batch_size,
        budget=budget,
        strategy=strategy,
        ensemble=ensemble,
        slow_loop=slow_loop == "on",
        seed=seed,
        record_timing=timing,
        concurrent_slow_loop=timing and slow_loop == "on",
    )
    if oracle == "simulated":
        if task.truth is None:
            raise click.UsageError("simulated oracle needs alignment.json in the task directory")
        answerer = SimulatedOracle(task.truth)
    else:
        answerer = ConsoleOracle(task)
    computer = FeatureComputer(ProviderPair.from_task_dir(task_dir))
    lexicon = (
        SynonymLexicon.from_file(lexicon_file)
        if lexicon_file is not None
        else SynonymLexicon.from_task_dir(task_dir)
    )
    trace_path = Path(trace_file)
    if trace_path.exists():
        trace_path.unlink()
    trace = run_fast_loop(
        task, answerer, config, computer=computer, lexicon=lexicon, trace=RunTrace(trace_path)
    )
    final = trace.last_of_type("final")
    click.echo(f"run complete: {len(trace.events)} events -> {trace_file}")
    if final is not None:
        click.echo(f"{len(final['annotated_matches'])} matches annotated, "
                   f"{len(final['predicted'])} predicted, total cost {final['total_cost']}")


@main.command()
@click.option("--config", "config_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def bench(config_file, out_dir):
    """Run a benchmark sweep: traces, curve CSVs, summary JSON, and figures."""
    from .bench import BenchConfig, run_benchmark

    config = BenchConfig.from_file(config_file)
    runs, summary = run_benchmark(config, out_dir)
    ok = sum(1 for r in runs if r.report is not None)
    click.echo(f"{ok}/{len(runs)} runs complete -> {out_dir}")
    for variant, data in summary["variants"].items():
        cost90 = data["cost_to_recall"]["90"]
        click.echo(f"  {variant}: mean cost to 90% recall = {cost90['mean']:.0f} (n={cost90['n']})")


@main.command()
@click.option("--trace", "trace_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", default=None, type=click.Path(file_okay=False))
def report(trace_file, out_dir):
    """Regenerate all metrics (and figures) from a recorded trace."""
    from .plots import plot_run_report

    trace = RunTrace.read(trace_file)
    result = report_from_trace(trace)
    click.echo(json.dumps(result.to_dict(), indent=1))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = Path(trace_file).stem
        (out / f"{stem}_report.json").write_text(json.dumps(result.to_dict(), indent=1))
        with open(out / f"{stem}_f1_curve.csv", "w") as handle:
            handle.write("budget_fraction,f1\n")
            for fraction, value in result.f1_curve:
                handle.write(f"{fraction},{value}\n")
        with open(out / f"{stem}_recall_cost.csv", "w") as handle:
            handle.write("cost,recall\n")
            for cost, recall in result.recall_cost:
                handle.write(f"{cost},{recall}\n")
        plot_run_report(result, out, stem=stem)
        click.echo(f"report files -> {out_dir}")


@main.command()
@click.option("--seed", type=int, default=1)
@click.option("--n-source", type=int, default=65)
@click.option("--n-target", type=int, default=75)
@click.option("--match-rate", type=float, default=0.006)
@click.option("--noise", type=float, default=0.9)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def synth(seed, n_source, n_target, match_rate, noise, out_dir):
    """Generate a synthetic task directory with ground truth."""
    task = generate_synthetic_task(seed, n_source, n_target, match_rate, noise)
    save_task_dir(task, out_dir)
    click.echo(f"task {task.source.id} vs {task.target.id}: "
               f"{len(task.source)}x{len(task.target)} classes, "
               f"{len(task.truth.pairs)} true matches -> {out_dir}")


@main.command()
@click.option("--data", "data_dir", required=True, type=click.Path(file_okay=False))
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@click.option("--frontend", "frontend_dir", default=None, type=click.Path(file_okay=False))
def serve(data_dir, host, port, frontend_dir):
    """Start the HTTP session service (serves the browser client when built)."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(data_dir, frontend_dir), host=host, port=port)


if __name__ == "__main__":
    main()
