"""Figure rendering for run reports and benchmark sweeps.

Figures are written next to the delimited output: per-run F1 and
recall-versus-cost curves, and per-variant aggregate curves with 95%
confidence bands for benchmark sweeps.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluation import EvaluationReport

_VARIANT_COLORS = {
    "dualloop": "tab:blue",
    "no-slow-loop": "tab:red",
    "entropy": "tab:orange",
    "uniform-ensemble": "tab:green",
}


def plot_run_report(report: EvaluationReport, out_dir: str | Path, stem: str = "run") -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    fig, ax = plt.subplots(figsize=(6, 4))
    fractions = [f for f, _ in report.f1_curve]
    ax.plot(fractions, [v for _, v in report.f1_curve], marker="o", markersize=3)
    ax.set_xlabel("budget fraction")
    ax.set_ylabel("F1 over candidate set")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(alpha=0.3)
    path = out / f"{stem}_f1_curve.png"
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot([c for c, _ in report.recall_cost], [r for _, r in report.recall_cost],
            marker="o", markersize=3)
    ax.set_xlabel("query cost (annotations + predicted matches)")
    ax.set_ylabel("recall")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(alpha=0.3)
    path = out / f"{stem}_recall_cost.png"
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    if report.stop_indicator:
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(range(len(report.stop_indicator)), report.stop_indicator, marker="o", markersize=3)
        ax.set_xlabel("batch")
        ax.set_ylabel("annotated + predicted matches")
        ax.grid(alpha=0.3)
        path = out / f"{stem}_stop_indicator.png"
        fig.tight_layout()
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written


def _plot_band(ax, points: dict, color: str, label: str) -> None:
    items = sorted(points.items(), key=lambda kv: float(kv[0]))
    fractions = [float(k) for k, _ in items]
    ax.plot(fractions, [v["mean"] for _, v in items], label=label, color=color)
    ax.fill_between(
        fractions,
        [v["ci_low"] for _, v in items],
        [v["ci_high"] for _, v in items],
        color=color,
        alpha=0.15,
    )


def plot_benchmark(summary: dict, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    for key, xlabel, stem in (
        ("f1_vs_budget", "budget fraction", "f1_vs_budget"),
        ("recall_vs_cost_fraction", "query cost / candidates", "recall_vs_cost"),
    ):
        fig, ax = plt.subplots(figsize=(6.5, 4.5))
        for variant, data in sorted(summary["variants"].items()):
            color = _VARIANT_COLORS.get(variant, "tab:gray")
            _plot_band(ax, data[key], color, variant)
        ax.set_xlabel(xlabel)
        ax.set_ylabel("F1" if key == "f1_vs_budget" else "recall")
        ax.set_ylim(-0.02, 1.02)
        ax.grid(alpha=0.3)
        ax.legend()
        path = out / f"{stem}.png"
        fig.tight_layout()
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written
