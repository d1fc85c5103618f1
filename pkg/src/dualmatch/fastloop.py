"""Query loop: batch selection, oracle interaction, and committee maintenance.

The loop owns the annotated/unlabeled partition of the candidate set. Each
round it refreshes the committee from the current functions and annotations,
selects a batch with the two-level strategy (highest match-vote group, then
highest committee certainty), queries the oracle, and integrates the answers.
Tunable-function publications from the exploration loop are merged only at
batch boundaries, which keeps a batch's selection deterministic.
"""

from __future__ import annotations

import gc
import time
from dataclasses import asdict, dataclass

import numpy as np

from .blocking import CandidateSet, generate_candidates
from .committee import CommitteeModel, fit_committee, predict_scores, uniform_committee
from .labeling import (
    MATCH,
    AnnotationStore,
    SynonymLexicon,
    initial_labeling_functions,
)
from .metrics import FeatureComputer
from .ontology import MatchTask
from .slowloop import (
    DEFAULT_DELTA,
    MetricRegistry,
    ProcessSlowLoop,
    Publication,
    SlowLoop,
    SlowLoopSnapshot,
)
from .trace import RunTrace

STRATEGIES = ("dualloop", "entropy")
ENSEMBLE_MODES = ("curated", "uniform")


class RunAborted(RuntimeError):
    """Oracle failure mid-run; the trace holds every event up to the failure."""

    def __init__(self, message: str, trace: RunTrace):
        super().__init__(message)
        self.trace = trace


@dataclass
class FastLoopConfig:
    batch_size: int = 10
    budget: int | None = None  # max annotations; defaults to the candidate count
    a_min: int | None = None  # committee-fit gate; defaults to one batch
    strategy: str = "dualloop"
    ensemble: str = "curated"
    slow_loop: bool = True
    seed: int = 0
    delta: float = DEFAULT_DELTA
    record_timing: bool = False
    concurrent_slow_loop: bool = False

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if self.ensemble not in ENSEMBLE_MODES:
            raise ValueError(f"ensemble must be one of {ENSEMBLE_MODES}")
        if self.budget is not None and self.budget < self.batch_size:
            raise ValueError("budget must cover at least one batch")

    def resolved_a_min(self) -> int:
        return self.a_min if self.a_min is not None else self.batch_size

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class QueryBatch:
    index: int
    indices: list[int]
    pair_ids: list[tuple[str, str]]
    predictions: list[tuple[int, float]]  # (yhat, p) per pair

    def __len__(self) -> int:
        return len(self.indices)


def group_by_match_votes(votes: np.ndarray, pool: list[int] | np.ndarray) -> dict[int, list[int]]:
    """Pool members grouped by how many functions vote match on them."""
    counts = np.sum(np.asarray(votes) == MATCH, axis=0)
    groups: dict[int, list[int]] = {}
    for index in pool:
        groups.setdefault(int(counts[index]), []).append(int(index))
    return groups


def select_query_batch(
    match_counts: np.ndarray, p: np.ndarray, pool_mask: np.ndarray, batch_size: int
) -> list[int]:
    """Two-level pick, repeated up to batch_size times over a shrinking pool.

    Each pick takes the nonempty group with the most match votes, then the
    member with the highest committee score; ties fall to the smallest index
    (candidate order is pair-id order). Votes and scores stay fixed for the
    whole batch.
    """
    alive = pool_mask.copy()
    picks: list[int] = []
    neg_inf = -np.inf
    for _ in range(batch_size):
        if not alive.any():
            break
        counts_alive = np.where(alive, match_counts, -1)
        top_group = counts_alive.max()
        in_group = alive & (counts_alive == top_group)
        scores = np.where(in_group, p, neg_inf)
        pick = int(np.argmax(scores))
        picks.append(pick)
        alive[pick] = False
    return picks


def entropy_select_batch(p: np.ndarray, pool_mask: np.ndarray, batch_size: int) -> list[int]:
    """Maximum-entropy ablation: closest to p = 0.5 first, ties by index."""
    pool = np.flatnonzero(pool_mask)
    order = np.lexsort((pool, np.abs(p[pool] - 0.5)))
    return [int(pool[i]) for i in order[:batch_size]]


class MatchEngine:
    """Owns the state of one matching run over a blocked candidate set."""

    def __init__(
        self,
        task: MatchTask,
        candidates: CandidateSet,
        computer: FeatureComputer,
        config: FastLoopConfig,
        lexicon: SynonymLexicon | None = None,
        trace: RunTrace | None = None,
        initial_votes: np.ndarray | None = None,
    ):
        self.task = task
        self.candidates = candidates
        self.config = config
        self.trace = trace if trace is not None else RunTrace()
        count = len(candidates)
        self.budget = min(config.budget, count) if config.budget is not None else count

        pairs = candidates.pairs
        self.pair_ids = [p.pair_id for p in pairs]
        self.pair_index = {pid: i for i, pid in enumerate(self.pair_ids)}
        self.features = []
        for pair in pairs:
            vector = pair.features
            if vector is None:
                vector = computer.vector(
                    task.source.get(pair.source_iri), task.target.get(pair.target_iri)
                )
                pair.features = vector
            self.features.append(vector)
        self.feature_matrix = (
            np.vstack([f.as_array() for f in self.features]) if count else np.empty((0, 9))
        )

        self.initial_lfs = initial_labeling_functions(lexicon)
        self.initial_votes = (
            initial_votes if initial_votes is not None else self._initial_votes(task, pairs)
        )

        self.store = AnnotationStore()
        self.annotated = np.zeros(count, dtype=bool)
        self.labels = np.full(count, -1, dtype=np.int8)

        self.registry = MetricRegistry(self.feature_matrix, seed=config.seed)
        self.slow: SlowLoop | None = None
        self.concurrent_slow: ProcessSlowLoop | None = None
        self.publication: Publication | None = None
        if config.slow_loop:
            self.slow = SlowLoop(
                self.registry, config.batch_size, config.resolved_a_min(), delta=config.delta
            )
            self.publication = self.slow.startup_publication()

        self.model: CommitteeModel | None = None
        self.p = np.zeros(count)
        self.yhat = np.zeros(count, dtype=np.int8)
        self.match_counts = np.zeros(count, dtype=np.int64)
        self.batches_done = 0
        self.stop_indicator_history: list[int] = []
        self._answer_received_at: float | None = None

        self.trace.append(self._run_start_event())
        if self.publication is not None:
            self.trace.append(self._slow_event(self.publication, boundary=0))
        self._refresh()
        self._emit_boundary_events(0)
        self._warm_hot_paths()

    def _warm_hot_paths(self) -> None:
        """Exercise the per-batch code paths once so the first real batch is not slower.

        Selection works on copies and the committee fit runs on a throwaway
        vote matrix; engine state is untouched.
        """
        if len(self.pair_ids) == 0:
            return
        pool = self.unlabeled_mask()
        size = min(self.config.batch_size, int(pool.sum()))
        select_query_batch(self.match_counts, self.p, pool, size)
        entropy_select_batch(self.p, pool, size)
        dummy_votes = np.tile(np.array([[1], [0], [-1], [1]], dtype=np.int8), (1, 8))
        dummy_labels = np.array([1, 0, 1, 0, 1, 0, 1, 0], dtype=np.int8)
        fit_committee([f"warm{i}" for i in range(4)], dummy_votes, dummy_labels)

    # ------------------------------------------------------------------
    # current function set
    # ------------------------------------------------------------------

    def lf_ids(self) -> list[str]:
        ids = [lf.id for lf in self.initial_lfs]
        if self.publication is not None:
            ids.extend(lf.id for lf in self.publication.functions)
        return ids

    def votes_matrix(self) -> np.ndarray:
        if self.publication is None:
            return self.initial_votes
        return np.vstack([self.initial_votes, self.publication.votes])

    def _initial_votes(self, task: MatchTask, pairs) -> np.ndarray:
        votes = np.empty((len(self.initial_lfs), len(pairs)), dtype=np.int8)
        for column, pair in enumerate(pairs):
            source = task.source.get(pair.source_iri)
            target = task.target.get(pair.target_iri)
            features = pair.features
            for row, lf in enumerate(self.initial_lfs):
                votes[row, column] = lf.vote(source, target, features)
        return votes

    # ------------------------------------------------------------------
    # committee refresh and boundary bookkeeping
    # ------------------------------------------------------------------

    def _refresh(self) -> None:
        votes = self.votes_matrix()
        ids = self.lf_ids()
        annotated_count = int(self.annotated.sum())
        if (
            self.config.ensemble == "curated"
            and annotated_count >= self.config.resolved_a_min()
        ):
            columns = np.flatnonzero(self.annotated)
            self.model = fit_committee(ids, votes[:, columns], self.labels[columns])
        else:
            self.model = uniform_committee(ids)
        member_rows = [ids.index(m) for m in self.model.member_ids]
        self.yhat, self.p, _ = predict_scores(self.model, votes[member_rows])
        self.match_counts = np.sum(votes == MATCH, axis=0)

    def unlabeled_mask(self) -> np.ndarray:
        return ~self.annotated

    def predicted_match_indices(self) -> list[int]:
        return [int(i) for i in np.flatnonzero((self.yhat == 1) & self.unlabeled_mask())]

    def _slow_snapshot(self) -> SlowLoopSnapshot:
        annotated_idx = np.flatnonzero(self.annotated)
        unlabeled_idx = np.flatnonzero(self.unlabeled_mask())
        return SlowLoopSnapshot(
            annotated_indices=annotated_idx,
            annotated_labels=self.labels[annotated_idx].copy(),
            unlabeled_indices=unlabeled_idx,
            unlabeled_yhat=self.yhat[unlabeled_idx].copy(),
            annotated_count=len(annotated_idx),
        )

    def start_concurrent_slow_loop(self) -> None:
        if self.slow is None or self.concurrent_slow is not None:
            return
        self.concurrent_slow = ProcessSlowLoop(
            self.feature_matrix,
            self.config.batch_size,
            self.config.resolved_a_min(),
            delta=self.config.delta,
            seed=self.config.seed,
        )
        self.concurrent_slow.start()

    def shutdown(self) -> None:
        if self.concurrent_slow is not None:
            self.concurrent_slow.stop()
            self.concurrent_slow = None
        self.trace.close()

    def _boundary(self, boundary: int) -> None:
        """Post-integration work: publication merge, committee refresh, snapshot.

        In concurrent mode any pending publication is merged up front so every
        boundary performs exactly one committee refresh (uniform latency). In
        deterministic mode the loop iteration runs synchronously against the
        freshly refreshed committee, and the refresh repeats after adoption so
        the snapshot reflects the current function set.
        """
        if self.concurrent_slow is not None:
            publication = self.concurrent_slow.take_publication()
            if publication is not None:
                self.publication = publication
                self.trace.append(self._slow_event(publication, boundary))
            self._refresh()
            self.concurrent_slow.push_snapshot(self._slow_snapshot())
        else:
            self._refresh()
            if self.slow is not None and self.slow.should_iterate(int(self.annotated.sum())):
                publication = self.slow.iterate(self._slow_snapshot())
                self.publication = publication
                self.trace.append(self._slow_event(publication, boundary))
                self._refresh()
        self._emit_boundary_events(boundary)

    def _emit_boundary_events(self, boundary: int) -> None:
        self.trace.append(
            {"type": "committee", "boundary": boundary, "snapshot": self.model.to_snapshot()}
        )
        predicted = self.predicted_match_indices()
        annotated_matches = int(np.sum(self.labels == 1))
        indicator = annotated_matches + len(predicted)
        self.stop_indicator_history.append(indicator)
        self.trace.append(
            {
                "type": "snapshot",
                "boundary": boundary,
                "annotated": int(self.annotated.sum()),
                "annotated_matches": annotated_matches,
                "predicted": predicted,
                "stop_indicator": indicator,
            }
        )

    # ------------------------------------------------------------------
    # batch lifecycle
    # ------------------------------------------------------------------

    def remaining_budget(self) -> int:
        return self.budget - int(self.annotated.sum())

    def next_batch(self) -> QueryBatch | None:
        """Select the next query batch; None when the budget or pool is exhausted."""
        pool = self.unlabeled_mask()
        size = min(self.config.batch_size, self.remaining_budget(), int(pool.sum()))
        if size <= 0:
            return None
        if self.config.strategy == "entropy":
            picks = entropy_select_batch(self.p, pool, size)
        else:
            picks = select_query_batch(self.match_counts, self.p, pool, size)
        batch = QueryBatch(
            index=self.batches_done + 1,
            indices=picks,
            pair_ids=[self.pair_ids[i] for i in picks],
            predictions=[(int(self.yhat[i]), round(float(self.p[i]), 6)) for i in picks],
        )
        self.trace.append(
            {
                "type": "batch",
                "index": batch.index,
                "pairs": batch.indices,
                "predictions": [[y, p] for y, p in batch.predictions],
            }
        )
        if self.config.record_timing and self._answer_received_at is not None:
            self.trace.append(
                {
                    "type": "timing",
                    "batch": batch.index,
                    "response_s": round(time.perf_counter() - self._answer_received_at, 6),
                }
            )
        return batch

    def submit_answers(self, batch: QueryBatch, answers: list[int]) -> None:
        """Integrate oracle answers for a batch and advance to the next boundary."""
        if len(answers) != len(batch):
            raise ValueError("one answer per batch pair required")
        self._answer_received_at = time.perf_counter()
        for index, label in zip(batch.indices, answers):
            self.store.annotate(self.pair_ids[index], int(label))
            self.annotated[index] = True
            self.labels[index] = int(label)
        self.trace.append(
            {"type": "answers", "batch": batch.index, "labels": [int(a) for a in answers]}
        )
        self.batches_done += 1
        self._boundary(self.batches_done)

    def run(self, oracle) -> RunTrace:
        """Drive the full loop against an oracle until the budget is exhausted."""
        if self.config.concurrent_slow_loop:
            self.start_concurrent_slow_loop()
        defer_gc = self.config.record_timing
        if defer_gc:
            # Keep collector pauses out of the measured response window; garbage
            # is collected during oracle think time instead.
            gc.disable()
        try:
            while True:
                batch = self.next_batch()
                if defer_gc:
                    gc.collect()
                if batch is None:
                    break
                try:
                    answers = [int(oracle.answer(pid)) for pid in batch.pair_ids]
                except Exception as exc:
                    self.trace.append(
                        {"type": "aborted", "batch": batch.index, "error": str(exc)}
                    )
                    raise RunAborted(f"oracle failed during batch {batch.index}: {exc}", self.trace) from exc
                self.submit_answers(batch, answers)
            self.finalize()
        finally:
            if defer_gc:
                gc.enable()
            self.shutdown()
        return self.trace

    def final_prediction(self) -> list[tuple[int, float]]:
        """Unlabeled predicted matches ordered by descending certainty (ties by index)."""
        indices = self.predicted_match_indices()
        return sorted(((i, float(self.p[i])) for i in indices), key=lambda item: (-item[1], item[0]))

    def finalize(self) -> dict:
        predicted = self.final_prediction()
        annotated_matches = [int(i) for i in np.flatnonzero(self.labels == 1)]
        event = {
            "type": "final",
            "predicted": [i for i, _ in predicted],
            "scores": [round(p, 6) for _, p in predicted],
            "annotated_matches": annotated_matches,
            "total_cost": int(self.annotated.sum()) + len(predicted),
        }
        self.trace.append(event)
        return event

    # ------------------------------------------------------------------
    # trace events
    # ------------------------------------------------------------------

    def _run_start_event(self) -> dict:
        truth = None
        misses: list = []
        if self.task.truth is not None:
            truth = sorted(self.task.truth.pairs)
            in_candidates = set(self.pair_ids)
            misses = sorted(p for p in self.task.truth.pairs if p not in in_candidates)
        return {
            "type": "run_start",
            "source_id": self.task.source.id,
            "target_id": self.task.target.id,
            "config": self.config.to_dict(),
            "budget": self.budget,
            "candidates": [list(p) for p in self.pair_ids],
            "truth": [list(p) for p in truth] if truth is not None else None,
            "blocking_misses": [list(p) for p in misses],
            "initial_lfs": [lf.id for lf in self.initial_lfs],
        }

    def _slow_event(self, publication: Publication, boundary: int) -> dict:
        return {
            "type": "slow_loop",
            "boundary": boundary,
            "generation": publication.generation,
            "trained": publication.trained,
            "relaxed": publication.relaxed,
            "thresholds": {k: round(v, 9) for k, v in publication.thresholds.items()},
            "h_max": {k: round(v, 9) for k, v in publication.h_max.items()},
            "failures": publication.failures,
        }


def run_fast_loop(
    task: MatchTask,
    oracle,
    config: FastLoopConfig,
    computer: FeatureComputer | None = None,
    candidates: CandidateSet | None = None,
    lexicon: SynonymLexicon | None = None,
    trace: RunTrace | None = None,
) -> RunTrace:
    """Block the task (unless given) and drive a full run against the oracle."""
    if computer is None:
        from .embeddings import ProviderPair

        computer = FeatureComputer(ProviderPair.builtin())
    if candidates is None:
        candidates = generate_candidates(task, computer)
    engine = MatchEngine(task, candidates, computer, config, lexicon=lexicon, trace=trace)
    return engine.run(oracle)
