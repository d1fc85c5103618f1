"""Simulated oracle and trace-derived evaluation metrics.

Every metric here is a pure function of the recorded event stream: the F1
curve over budget fractions (candidate-set F1 where annotated pairs carry
their true label and the rest carry the committee prediction), the
recall-versus-query-cost curve (cost = annotations plus predicted matches to
verify), and the cost needed to reach fixed recall levels. Recall denominators
always use the full ground truth, so blocking misses count against recall.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .ontology import GroundTruth
from .trace import RunTrace

RECALL_LEVELS = (0.70, 0.80, 0.90, 0.98)
F1_CURVE_STEP = 0.02


class SimulatedOracle:
    """Answers membership in the ground truth; stable per pair."""

    def __init__(self, truth: GroundTruth):
        self.truth = truth
        self.queries = 0

    def answer(self, pair_id: tuple[str, str]) -> int:
        self.queries += 1
        return 1 if tuple(pair_id) in self.truth.pairs else 0


def simulated_oracle(truth: GroundTruth, pair_id: tuple[str, str]) -> int:
    return SimulatedOracle(truth).answer(pair_id)


@dataclass
class ResponseTimeStats:
    count: int
    mean: float
    maximum: float

    def to_dict(self) -> dict:
        return {"count": self.count, "mean": self.mean, "max": self.maximum}


@dataclass
class EvaluationReport:
    f1_curve: list[tuple[float, float]]  # (budget fraction, F1)
    recall_cost: list[tuple[int, float]]  # (query cost, recall)
    cost_to_recall: dict[float, int | None]
    total_cost: int
    final_recall: float
    response_times: ResponseTimeStats | None = None
    stop_indicator: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "f1_curve": [[round(f, 4), round(v, 6)] for f, v in self.f1_curve],
            "recall_cost": [[c, round(r, 6)] for c, r in self.recall_cost],
            "cost_to_recall": {
                str(int(level * 100)): cost for level, cost in self.cost_to_recall.items()
            },
            "total_cost": self.total_cost,
            "final_recall": round(self.final_recall, 6),
            "response_times": self.response_times.to_dict() if self.response_times else None,
            "stop_indicator": self.stop_indicator,
        }


class _TraceView:
    """Indexes the events of one run for metric computation."""

    def __init__(self, events: list[dict]):
        start = next(e for e in events if e["type"] == "run_start")
        self.budget = int(start["budget"])
        self.candidates = [tuple(p) for p in start["candidates"]]
        self.truth = (
            {tuple(p) for p in start["truth"]} if start.get("truth") is not None else None
        )
        self.truth_indices = (
            {i for i, p in enumerate(self.candidates) if p in self.truth}
            if self.truth is not None
            else set()
        )
        answers_by_batch = {e["batch"]: e["labels"] for e in events if e["type"] == "answers"}
        batches = {e["index"]: e["pairs"] for e in events if e["type"] == "batch"}

        # State replay: per boundary, the annotated set and labels.
        self.snapshots: list[dict] = []
        annotated_1: set[int] = set()
        annotated_all: set[int] = set()
        boundary_events = [e for e in events if e["type"] == "snapshot"]
        for snap in boundary_events:
            boundary = snap["boundary"]
            if boundary > 0:
                pairs = batches.get(boundary, [])
                labels = answers_by_batch.get(boundary, [])
                for index, label in zip(pairs, labels):
                    annotated_all.add(index)
                    if label == 1:
                        annotated_1.add(index)
            self.snapshots.append(
                {
                    "boundary": boundary,
                    "annotated": snap["annotated"],
                    "predicted": set(snap["predicted"]),
                    "annotated_1": set(annotated_1),
                    "stop_indicator": snap["stop_indicator"],
                }
            )
        self.final = next((e for e in events if e["type"] == "final"), None)
        self.timings = [e["response_s"] for e in events if e["type"] == "timing"]

    def positives_at(self, snapshot: dict) -> set[int]:
        return snapshot["annotated_1"] | snapshot["predicted"]

    def f1_at(self, snapshot: dict) -> float:
        if self.truth is None:
            raise ValueError("trace has no ground truth; F1 undefined")
        positives = self.positives_at(snapshot)
        tp = len(positives & self.truth_indices)
        fp = len(positives) - tp
        fn = len(self.truth) - tp
        denominator = 2 * tp + fp + fn
        return 2 * tp / denominator if denominator else 0.0

    def recall_at(self, snapshot: dict) -> float:
        if self.truth is None:
            raise ValueError("trace has no ground truth; recall undefined")
        if not self.truth:
            return 1.0
        found = len(self.positives_at(snapshot) & self.truth_indices)
        return found / len(self.truth)

    def cost_at(self, snapshot: dict) -> int:
        return snapshot["annotated"] + len(snapshot["predicted"])


def compute_f1_curve(trace: RunTrace | list[dict], points: list[float] | None = None) -> list[tuple[float, float]]:
    """F1 over the candidate set at each budget fraction (2% steps by default)."""
    view = _TraceView(trace.events if isinstance(trace, RunTrace) else trace)
    if points is None:
        steps = int(round(1.0 / F1_CURVE_STEP))
        points = [i * F1_CURVE_STEP for i in range(steps + 1)]
    curve = []
    for fraction in points:
        target = fraction * view.budget + 1e-9
        eligible = [s for s in view.snapshots if s["annotated"] <= target]
        snapshot = eligible[-1] if eligible else view.snapshots[0]
        curve.append((fraction, view.f1_at(snapshot)))
    return curve


def compute_recall_vs_cost(trace: RunTrace | list[dict]) -> list[tuple[int, float]]:
    """(cost, recall) at every batch boundary."""
    view = _TraceView(trace.events if isinstance(trace, RunTrace) else trace)
    return [(view.cost_at(s), view.recall_at(s)) for s in view.snapshots]


def cost_to_reach_recall(
    curve: list[tuple[int, float]], levels: tuple[float, ...] = RECALL_LEVELS
) -> dict[float, int | None]:
    """Minimal cost achieving each recall level; None when never reached."""
    table: dict[float, int | None] = {}
    for level in levels:
        reached = [cost for cost, recall in curve if recall >= level - 1e-12]
        table[level] = min(reached) if reached else None
    return table


def report_from_trace(trace: RunTrace | list[dict]) -> EvaluationReport:
    events = trace.events if isinstance(trace, RunTrace) else trace
    view = _TraceView(events)
    recall_cost = compute_recall_vs_cost(events)
    final_snapshot = view.snapshots[-1]
    response = None
    if view.timings:
        response = ResponseTimeStats(
            count=len(view.timings),
            mean=sum(view.timings) / len(view.timings),
            maximum=max(view.timings),
        )
    if view.final is not None:
        total_cost = int(view.final["total_cost"])
    else:
        total_cost = view.cost_at(final_snapshot)
    return EvaluationReport(
        f1_curve=compute_f1_curve(events),
        recall_cost=recall_cost,
        cost_to_recall=cost_to_reach_recall(recall_cost),
        total_cost=total_cost,
        final_recall=view.recall_at(final_snapshot),
        response_times=response,
        stop_indicator=[s["stop_indicator"] for s in view.snapshots],
    )
