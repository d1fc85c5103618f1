"""Exploration loop: trains match scorers and tunes thresholds for the tunable functions.

Ten distance metrics drive the tunable labeling functions: the six embedding
distances plus the no-match probabilities of four models (random forest,
boosted trees, logistic regression, small MLP) retrained from the annotations.
Each iteration retrains the scorers, relaxes the per-metric threshold ceiling
when the committee has run out of predicted matches, and re-tunes every
threshold by maximizing annotated true positives with committee agreement as
the tie breaker.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.ensemble import GradientBoostingClassifier, RandomForestClassifier
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import LogisticRegression
from sklearn.neural_network import MLPClassifier

from .labeling import TunableLF
from .metrics import EMBEDDING_FEATURES, FEATURE_NAMES

SCORER_IDS = ("scorer-rf", "scorer-gbt", "scorer-lr", "scorer-mlp")
TUNABLE_METRICS = tuple(EMBEDDING_FEATURES) + SCORER_IDS
DEFAULT_DELTA = 0.02


def _build_scorers(seed: int) -> dict:
    return {
        "scorer-rf": RandomForestClassifier(n_estimators=50, max_depth=8, random_state=seed),
        "scorer-gbt": GradientBoostingClassifier(n_estimators=30, max_depth=3, random_state=seed),
        "scorer-lr": LogisticRegression(max_iter=1000),
        "scorer-mlp": MLPClassifier(hidden_layer_sizes=(16,), max_iter=300, random_state=seed),
    }


class MetricRegistry:
    """Metric values over the candidate set, refreshed for scorers on retrain.

    Embedding metric values are fixed columns of the feature matrix; scorer
    metrics emit distance 1 for every pair until the first successful training.
    """

    def __init__(self, features: np.ndarray, seed: int = 0):
        if features.ndim != 2 or features.shape[1] != len(FEATURE_NAMES):
            raise ValueError("features must be (pairs x 9)")
        self._features = features
        self._seed = seed
        count = features.shape[0]
        self._values: dict[str, np.ndarray] = {
            metric: features[:, FEATURE_NAMES.index(metric)].copy()
            for metric in EMBEDDING_FEATURES
        }
        for scorer_id in SCORER_IDS:
            self._values[scorer_id] = np.ones(count, dtype=np.float64)
        self.trainings = 0

    @property
    def metric_ids(self) -> tuple[str, ...]:
        return TUNABLE_METRICS

    def values(self, metric_id: str) -> np.ndarray:
        return self._values[metric_id]

    def train_match_scorers(self, annotated_indices: np.ndarray, labels: np.ndarray) -> bool:
        """Refit all scorers from scratch on the annotated features.

        Requires both classes among the labels; otherwise skipped (distances
        stay at their previous values, all-ones before the first training).
        """
        labels = np.asarray(labels, dtype=np.int64)
        if len(labels) == 0 or labels.min() == labels.max():
            return False
        train_x = self._features[np.asarray(annotated_indices, dtype=np.int64)]
        fresh: dict[str, np.ndarray] = {}
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            for scorer_id, model in _build_scorers(self._seed).items():
                model.fit(train_x, labels)
                proba = model.predict_proba(self._features)
                no_match_column = int(np.where(model.classes_ == 0)[0][0])
                fresh[scorer_id] = np.clip(proba[:, no_match_column], 0.0, 1.0)
        self._values.update(fresh)
        self.trainings += 1
        return True


@dataclass
class ThresholdState:
    delta: float = DEFAULT_DELTA
    h: dict[str, float] = field(default_factory=lambda: {m: 0.0 for m in TUNABLE_METRICS})
    h_max: dict[str, float] = field(default_factory=lambda: {m: 0.0 for m in TUNABLE_METRICS})

    def check_invariant(self) -> None:
        for metric in TUNABLE_METRICS:
            if self.h[metric] > self.h_max[metric]:
                raise AssertionError(f"{metric}: h={self.h[metric]} above ceiling {self.h_max[metric]}")


def maybe_relax_hmax(state: ThresholdState, committee_predicts_match: bool) -> bool:
    """Raise every ceiling by delta when the committee predicts no match at all."""
    if committee_predicts_match:
        return False
    for metric in TUNABLE_METRICS:
        state.h_max[metric] += state.delta
    return True


def tune_threshold(
    values: np.ndarray,
    h_max: float,
    annotated_indices: np.ndarray,
    annotated_labels: np.ndarray,
    unlabeled_indices: np.ndarray,
    unlabeled_yhat: np.ndarray,
    batch_size: int,
) -> float:
    """Exact argmax of the tuning objective over thresholds up to the ceiling.

    Objective: annotated true positives, plus precision against the committee's
    predictions, plus a soft penalty once false positives against the committee
    exceed one batch. The objective is piecewise constant between observed
    metric values, so searching {0} and the observed values at or below the
    ceiling is exhaustive. Ties pick the smaller threshold.
    """
    annotated_indices = np.asarray(annotated_indices, dtype=np.int64)
    annotated_labels = np.asarray(annotated_labels)
    unlabeled_indices = np.asarray(unlabeled_indices, dtype=np.int64)
    unlabeled_yhat = np.asarray(unlabeled_yhat)

    candidates = np.unique(np.concatenate(([0.0], values[values <= h_max])))
    positives_a = np.sort(values[annotated_indices[annotated_labels == 1]]) if len(annotated_indices) else np.empty(0)
    u_values = values[unlabeled_indices] if len(unlabeled_indices) else np.empty(0)
    cmt_pos = np.sort(u_values[unlabeled_yhat == 1]) if len(u_values) else np.empty(0)
    cmt_neg = np.sort(u_values[unlabeled_yhat == 0]) if len(u_values) else np.empty(0)

    tp_a = np.searchsorted(positives_a, candidates, side="right").astype(np.float64)
    tp_cmt = np.searchsorted(cmt_pos, candidates, side="right").astype(np.float64)
    fp_cmt = np.searchsorted(cmt_neg, candidates, side="right").astype(np.float64)
    predicted = tp_cmt + fp_cmt
    precision_cmt = np.divide(tp_cmt, predicted, out=np.zeros_like(tp_cmt), where=predicted > 0)
    objective = tp_a + precision_cmt + batch_size / np.maximum(fp_cmt, batch_size)
    return float(candidates[int(np.argmax(objective))])


@dataclass
class Publication:
    """One atomic snapshot of the ten tunable functions and their votes."""

    generation: int
    functions: list[TunableLF]
    votes: np.ndarray  # (10 x pairs) int8
    thresholds: dict[str, float]
    h_max: dict[str, float]
    trained: bool
    relaxed: bool
    failures: list[str] = field(default_factory=list)


@dataclass
class SlowLoopSnapshot:
    """State handed to one slow-loop iteration (taken at iteration start)."""

    annotated_indices: np.ndarray
    annotated_labels: np.ndarray
    unlabeled_indices: np.ndarray
    unlabeled_yhat: np.ndarray
    annotated_count: int


class SlowLoop:
    """Owns threshold state and scorer training; produces publications."""

    def __init__(self, registry: MetricRegistry, batch_size: int, a_min: int, delta: float = DEFAULT_DELTA):
        self.registry = registry
        self.batch_size = batch_size
        self.a_min = a_min
        self.state = ThresholdState(delta=delta)
        self.generation = 0
        self.iterations = 0
        self._annotations_at_last: int | None = None

    def startup_publication(self) -> Publication:
        """The initial functions at threshold zero, added before any tuning."""
        self.generation += 1
        functions = [TunableLF(metric, 0.0) for metric in TUNABLE_METRICS]
        return Publication(
            generation=self.generation,
            functions=functions,
            votes=self._votes(functions),
            thresholds=dict(self.state.h),
            h_max=dict(self.state.h_max),
            trained=False,
            relaxed=False,
        )

    def should_iterate(self, annotated_count: int) -> bool:
        if self._annotations_at_last is None:
            return annotated_count >= self.a_min
        return annotated_count - self._annotations_at_last >= 2 * self.batch_size

    def iterate(self, snapshot: SlowLoopSnapshot) -> Publication:
        """One tuning pass: retrain scorers, relax ceilings if stalled, re-tune thresholds."""
        self._annotations_at_last = snapshot.annotated_count
        self.iterations += 1
        trained = self.registry.train_match_scorers(snapshot.annotated_indices, snapshot.annotated_labels)
        predicts_match = bool(np.any(snapshot.unlabeled_yhat == 1))
        relaxed = maybe_relax_hmax(self.state, predicts_match)
        failures: list[str] = []
        for metric in TUNABLE_METRICS:
            try:
                self.state.h[metric] = tune_threshold(
                    self.registry.values(metric),
                    self.state.h_max[metric],
                    snapshot.annotated_indices,
                    snapshot.annotated_labels,
                    snapshot.unlabeled_indices,
                    snapshot.unlabeled_yhat,
                    self.batch_size,
                )
            except Exception as exc:  # keep the previous function for this metric
                failures.append(f"{metric}: {exc}")
        self.state.check_invariant()
        functions = [TunableLF(metric, self.state.h[metric]) for metric in TUNABLE_METRICS]
        self.generation += 1
        return Publication(
            generation=self.generation,
            functions=functions,
            votes=self._votes(functions),
            thresholds=dict(self.state.h),
            h_max=dict(self.state.h_max),
            trained=trained,
            relaxed=relaxed,
            failures=failures,
        )

    def _votes(self, functions: list[TunableLF]) -> np.ndarray:
        rows = [
            (self.registry.values(lf.metric_id) <= lf.threshold).astype(np.int8)
            for lf in functions
        ]
        return np.vstack(rows)


def _slow_worker(inbox, outbox, features: np.ndarray, batch_size: int, a_min: int,
                 delta: float, seed: int) -> None:
    import queue as queue_mod

    try:  # keep the worker off the driver's core: no BLAS thread fan-out
        from threadpoolctl import threadpool_limits

        threadpool_limits(1)
    except ImportError:
        pass
    registry = MetricRegistry(features, seed=seed)
    slow = SlowLoop(registry, batch_size, a_min, delta=delta)
    slow.generation = 1  # the driver already published the zero-threshold startup set
    while True:
        message = inbox.get()
        while True:  # drain to the most recent snapshot
            try:
                newer = inbox.get_nowait()
            except queue_mod.Empty:
                break
            message = newer
            if message[0] == "stop":
                break
        if message[0] == "stop":
            break
        _, annotated_idx, labels, unlabeled_idx, yhat = message
        snapshot = SlowLoopSnapshot(
            annotated_indices=annotated_idx,
            annotated_labels=labels,
            unlabeled_indices=unlabeled_idx,
            unlabeled_yhat=yhat,
            annotated_count=len(annotated_idx),
        )
        if slow.should_iterate(snapshot.annotated_count):
            publication = slow.iterate(snapshot)
            outbox.put(
                (
                    publication.generation,
                    publication.thresholds,
                    publication.h_max,
                    publication.votes,
                    publication.trained,
                    publication.relaxed,
                    publication.failures,
                )
            )


class ProcessSlowLoop:
    """Runs the slow loop in a worker process.

    Keeps scorer training off the driver's interpreter entirely: the fast path
    only enqueues state snapshots at batch boundaries and polls for finished
    publications, so batch delivery latency stays flat while models train.
    Queues (not raw pipes) carry the payloads; their feeder threads make both
    directions non-blocking regardless of payload size.
    """

    def __init__(self, features: np.ndarray, batch_size: int, a_min: int,
                 delta: float = DEFAULT_DELTA, seed: int = 0):
        import multiprocessing as mp

        context = mp.get_context("fork")
        self._to_worker = context.Queue()
        self._from_worker = context.Queue()
        self._process = context.Process(
            target=_slow_worker,
            args=(self._to_worker, self._from_worker, features, batch_size, a_min, delta, seed),
            daemon=True,
        )
        self._alive = False

    def start(self) -> None:
        self._process.start()
        self._alive = True

    def push_snapshot(self, snapshot: SlowLoopSnapshot) -> None:
        if not self._alive:
            return
        self._to_worker.put(
            (
                "snapshot",
                snapshot.annotated_indices,
                snapshot.annotated_labels,
                snapshot.unlabeled_indices,
                snapshot.unlabeled_yhat,
            )
        )

    def take_publication(self) -> Publication | None:
        import queue as queue_mod

        if not self._alive:
            return None
        publication = None
        while True:
            try:
                generation, thresholds, h_max, votes, trained, relaxed, failures = (
                    self._from_worker.get_nowait()
                )
            except queue_mod.Empty:
                break
            publication = Publication(
                generation=generation,
                functions=[TunableLF(m, thresholds[m]) for m in TUNABLE_METRICS],
                votes=votes,
                thresholds=thresholds,
                h_max=h_max,
                trained=trained,
                relaxed=relaxed,
                failures=failures,
            )
        return publication

    def stop(self) -> None:
        if self._alive:
            self._to_worker.put(("stop",))
        self._alive = False
        self._process.join(timeout=5)
        if self._process.is_alive():
            self._process.terminate()
            self._process.join(timeout=5)
        self._to_worker.cancel_join_thread()
        self._from_worker.cancel_join_thread()
