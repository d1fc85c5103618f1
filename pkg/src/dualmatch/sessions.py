"""Interactive verification sessions over a matching engine.

A session walks a human expert through annotation batches, then through final
verification of the predicted matches, and exports the combined alignment.
State is durable: a small header file plus the run trace fully determine a
session, and restoring replays the recorded answers through a fresh engine
(the engine is deterministic given the answer sequence).
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .blocking import CandidateSet, generate_candidates
from .embeddings import ProviderPair
from .fastloop import FastLoopConfig, MatchEngine, QueryBatch
from .labeling import SynonymLexicon
from .metrics import FeatureComputer
from .ontology import MatchTask
from .trace import RunTrace, read_events

PAIR_KEY_SEPARATOR = "||"

PHASE_ANNOTATING = "annotating"
PHASE_VERIFYING = "verifying"
PHASE_CLOSED = "closed"

DECISIONS = ("confirm", "revise-to-0", "revise-to-1")


class SessionError(Exception):
    def __init__(self, message: str, status: int = 400):
        super().__init__(message)
        self.status = status


def pair_key(pair_id: tuple[str, str]) -> str:
    return f"{pair_id[0]}{PAIR_KEY_SEPARATOR}{pair_id[1]}"


def parse_pair_key(key: str) -> tuple[str, str]:
    source, _, target = key.partition(PAIR_KEY_SEPARATOR)
    if not source or not target:
        raise SessionError(f"malformed pair key {key!r}")
    return (source, target)


@dataclass
class SessionConfig:
    batch_size: int = 10
    budget: int | None = None
    strategy: str = "dualloop"
    ensemble: str = "curated"
    slow_loop: bool = True
    seed: int = 0

    @classmethod
    def from_dict(cls, data: dict) -> "SessionConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise SessionError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    def to_fast_loop(self) -> FastLoopConfig:
        return FastLoopConfig(
            batch_size=self.batch_size,
            budget=self.budget,
            strategy=self.strategy,
            ensemble=self.ensemble,
            slow_loop=self.slow_loop,
            seed=self.seed,
        )


@dataclass
class _Pending:
    token: str
    batch: QueryBatch


class Session:
    """One expert's pass over a task; writes are serialized by a per-session lock."""

    def __init__(self, session_id: str, task_id: str, engine: MatchEngine,
                 config: SessionConfig, directory: Path):
        self.id = session_id
        self.task_id = task_id
        self.engine = engine
        self.config = config
        self.directory = directory
        self.lock = threading.RLock()
        self.phase = PHASE_ANNOTATING
        self.pending: _Pending | None = None
        self.last_completed: tuple[str, dict] | None = None  # (token, response)
        self.observations: dict[str, str] = {}
        self.predictions: list[tuple[int, float]] = []
        self.final_matches: list[tuple[str, str]] | None = None
        self.response_times: list[float] = []
        self._token_counter = 0

    # ------------------------------------------------------------------
    # lifecycle
    # ------------------------------------------------------------------

    @classmethod
    def create(cls, session_id: str, task_id: str, task: MatchTask,
               candidates: CandidateSet, computer: FeatureComputer,
               config: SessionConfig, directory: Path,
               lexicon: SynonymLexicon | None = None) -> "Session":
        directory.mkdir(parents=True, exist_ok=True)
        trace_path = directory / "trace.jsonl"
        if trace_path.exists():
            trace_path.unlink()
        engine = MatchEngine(
            task, candidates, computer, config.to_fast_loop(), lexicon=lexicon,
            trace=RunTrace(trace_path)
        )
        session = cls(session_id, task_id, engine, config, directory)
        session._advance()
        session._persist()
        return session

    def _advance(self) -> None:
        """Prepare the next batch or move to verification."""
        batch = self.engine.next_batch()
        if batch is None:
            self.phase = PHASE_VERIFYING
            self.pending = None
            self.predictions = self.engine.final_prediction()
            self.engine.finalize()
        else:
            self._token_counter += 1
            self.pending = _Pending(token=f"batch-{self._token_counter}", batch=batch)

    def _persist(self) -> None:
        header = {
            "session_id": self.id,
            "task_id": self.task_id,
            "config": self.config.__dict__,
            "phase": self.phase,
            "token_counter": self._token_counter,
            "pending": (
                {"token": self.pending.token, "indices": self.pending.batch.indices}
                if self.pending
                else None
            ),
            "observations": self.observations,
            "final_matches": (
                [list(p) for p in self.final_matches] if self.final_matches is not None else None
            ),
            "response_times": [round(t, 6) for t in self.response_times],
        }
        tmp = self.directory / "header.json.tmp"
        tmp.write_text(json.dumps(header, indent=1))
        os.replace(tmp, self.directory / "header.json")

    # ------------------------------------------------------------------
    # annotating phase
    # ------------------------------------------------------------------

    def _pair_payload(self, index: int, prediction: tuple[int, float]) -> dict:
        source_iri, target_iri = self.engine.pair_ids[index]
        source = self.engine.task.source.get(source_iri)
        target = self.engine.task.target.get(target_iri)
        return {
            "pairId": pair_key((source_iri, target_iri)),
            "source": {"iri": source.iri, "name": source.name, "label": source.label,
                       "comment": source.comment},
            "target": {"iri": target.iri, "name": target.name, "label": target.label,
                       "comment": target.comment},
            "predicted": prediction[0],
            "certainty": prediction[1],
        }

    def get_batch(self) -> dict:
        with self.lock:
            if self.phase != PHASE_ANNOTATING:
                raise SessionError(f"session is in phase {self.phase!r}", status=409)
            assert self.pending is not None
            batch = self.pending.batch
            return {
                "batchToken": self.pending.token,
                "batchIndex": batch.index,
                "pairs": [
                    self._pair_payload(i, pred)
                    for i, pred in zip(batch.indices, batch.predictions)
                ],
            }

    def submit_annotations(self, batch_token: str, answers: dict[str, str]) -> dict:
        with self.lock:
            if self.last_completed is not None and batch_token == self.last_completed[0]:
                return self.last_completed[1]  # idempotent retransmission
            if self.phase != PHASE_ANNOTATING:
                raise SessionError(f"session is in phase {self.phase!r}", status=409)
            assert self.pending is not None
            if batch_token != self.pending.token:
                raise SessionError(
                    f"stale batch token {batch_token!r} (pending {self.pending.token!r})",
                    status=409,
                )
            batch = self.pending.batch
            expected = {pair_key(pid) for pid in batch.pair_ids}
            provided = set(answers)
            if provided != expected:
                missing = sorted(expected - provided)
                extra = sorted(provided - expected)
                raise SessionError(
                    f"answers must cover exactly the pending batch; missing={missing} extra={extra}",
                    status=409,
                )
            labels = []
            for pid, (predicted, _) in zip(batch.pair_ids, batch.predictions):
                decision = answers[pair_key(pid)]
                if decision not in DECISIONS:
                    raise SessionError(f"unknown decision {decision!r}")
                if decision == "confirm":
                    labels.append(int(predicted))
                else:
                    labels.append(0 if decision == "revise-to-0" else 1)

            started = time.perf_counter()
            self.engine.submit_answers(batch, labels)
            self._advance()
            self.response_times.append(time.perf_counter() - started)
            response = {
                "accepted": len(labels),
                "phase": self.phase,
                "annotated": int(self.engine.annotated.sum()),
                "stopIndicator": self.engine.stop_indicator_history[-1],
            }
            self.last_completed = (batch_token, response)
            self._persist()
            return response

    # ------------------------------------------------------------------
    # verification phase
    # ------------------------------------------------------------------

    def get_predictions(self) -> dict:
        with self.lock:
            if self.phase == PHASE_ANNOTATING:
                raise SessionError("session is still annotating", status=409)
            return {
                "predictions": [
                    self._pair_payload(i, (1, round(p, 6))) for i, p in self.predictions
                ]
            }

    def submit_verifications(self, decisions: dict[str, bool]) -> dict:
        with self.lock:
            if self.phase != PHASE_VERIFYING:
                raise SessionError(f"session is in phase {self.phase!r}", status=409)
            expected = {pair_key(self.engine.pair_ids[i]) for i, _ in self.predictions}
            if set(decisions) != expected:
                raise SessionError(
                    "verification decisions must cover exactly the predicted matches",
                    status=409,
                )
            confirmed = [
                self.engine.pair_ids[i]
                for i, _ in self.predictions
                if decisions[pair_key(self.engine.pair_ids[i])]
            ]
            annotated = [
                self.engine.pair_ids[int(i)]
                for i in np.flatnonzero(self.engine.labels == 1)
            ]
            final = sorted(set(annotated) | set(confirmed))
            self.final_matches = final
            self.engine.trace.append(
                {
                    "type": "verification",
                    "confirmed": [self.engine.pair_index[p] for p in sorted(confirmed)],
                    "rejected": [
                        self.engine.pair_index[self.engine.pair_ids[i]]
                        for i, _ in self.predictions
                        if not decisions[pair_key(self.engine.pair_ids[i])]
                    ],
                }
            )
            self.phase = PHASE_CLOSED
            self._persist()
            return {"finalMatches": len(final), "phase": self.phase}

    def export(self) -> dict:
        with self.lock:
            if self.phase != PHASE_CLOSED or self.final_matches is None:
                raise SessionError("session is not closed yet", status=409)
            return {"matches": [{"source": s, "target": t} for s, t in self.final_matches]}

    # ------------------------------------------------------------------
    # observation list
    # ------------------------------------------------------------------

    def add_observation(self, key: str, note: str = "") -> dict:
        with self.lock:
            pair = parse_pair_key(key)
            if pair not in self.engine.pair_index:
                raise SessionError(f"unknown pair {key!r}", status=404)
            already = key in self.observations
            if not (already and not note):  # duplicate add without a note keeps the old note
                self.observations[key] = note
            self.engine.trace.append(
                {"type": "observation", "op": "add", "pair": self.engine.pair_index[pair],
                 "note": note}
            )
            self._persist()
            return {"added": not already, "count": len(self.observations)}

    def remove_observation(self, key: str) -> dict:
        with self.lock:
            present = key in self.observations
            if present:
                pair = parse_pair_key(key)
                self.observations.pop(key)
                self.engine.trace.append(
                    {"type": "observation", "op": "remove",
                     "pair": self.engine.pair_index[pair]}
                )
                self._persist()
            return {"removed": present, "count": len(self.observations)}

    def list_observations(self) -> dict:
        with self.lock:
            return {
                "observations": [
                    {"pairId": key, "note": note} for key, note in sorted(self.observations.items())
                ]
            }

    # ------------------------------------------------------------------
    # status
    # ------------------------------------------------------------------

    def status(self) -> dict:
        with self.lock:
            times = self.response_times
            return {
                "sessionId": self.id,
                "taskId": self.task_id,
                "phase": self.phase,
                "annotated": int(self.engine.annotated.sum()),
                "remaining": int(self.engine.unlabeled_mask().sum()),
                "budget": self.engine.budget,
                "batchSize": self.config.batch_size,
                "stopIndicatorHistory": self.engine.stop_indicator_history,
                "responseTimeStats": {
                    "count": len(times),
                    "mean": sum(times) / len(times) if times else None,
                    "max": max(times) if times else None,
                },
            }

    # ------------------------------------------------------------------
    # restore
    # ------------------------------------------------------------------

    @classmethod
    def restore(cls, directory: Path, task_id: str, task: MatchTask,
                candidates: CandidateSet, computer: FeatureComputer,
                lexicon: SynonymLexicon | None = None) -> "Session":
        """Rebuild a session by replaying the recorded answers through a fresh engine."""
        header = json.loads((directory / "header.json").read_text())
        config = SessionConfig.from_dict(header["config"])
        events = list(read_events(directory / "trace.jsonl"))
        batches = {e["index"]: e for e in events if e["type"] == "batch"}
        answers = {e["batch"]: e["labels"] for e in events if e["type"] == "answers"}

        engine = MatchEngine(task, candidates, computer, config.to_fast_loop(), lexicon=lexicon)
        for index in sorted(answers):
            batch = engine.next_batch()
            if batch is None or batch.indices != batches[index]["pairs"]:
                raise SessionError(f"trace replay diverged at batch {index}", status=500)
            engine.submit_answers(batch, answers[index])

        session = cls(header["session_id"], task_id, engine, config, directory)
        session._token_counter = header["token_counter"]
        session.phase = header["phase"]
        session.observations = dict(header["observations"])
        session.response_times = list(header.get("response_times", []))
        if header.get("final_matches") is not None:
            session.final_matches = [tuple(p) for p in header["final_matches"]]
        if session.phase == PHASE_ANNOTATING:
            pending = header["pending"]
            batch = engine.next_batch()
            if batch is None or batch.indices != pending["indices"]:
                raise SessionError("pending batch replay diverged", status=500)
            session.pending = _Pending(token=pending["token"], batch=batch)
        elif session.phase in (PHASE_VERIFYING, PHASE_CLOSED):
            session.predictions = engine.final_prediction()
            engine.finalize()
        # replay wrote to an in-memory trace; append future events to the file
        engine.trace.attach(directory / "trace.jsonl")
        return session


class SessionStore:
    """Tasks and sessions rooted in one data directory."""

    def __init__(self, data_dir: str | Path):
        self.root = Path(data_dir)
        (self.root / "tasks").mkdir(parents=True, exist_ok=True)
        (self.root / "sessions").mkdir(parents=True, exist_ok=True)
        self.sessions: dict[str, Session] = {}
        self._prepared: dict[str, tuple] = {}
        self._lock = threading.Lock()

    # -- tasks ----------------------------------------------------------

    def add_task(self, task_id: str, source_doc: dict, target_doc: dict,
                 alignment_doc: dict | None = None) -> str:
        from .ontology import MatchTask as _Task, load_alignment, parse_ontology, save_task_dir

        source = parse_ontology(source_doc)
        target = parse_ontology(target_doc)
        task = _Task(source=source, target=target)
        if alignment_doc is not None:
            task.truth = load_alignment(alignment_doc, task)
        save_task_dir(task, self.root / "tasks" / task_id)
        with self._lock:
            self._prepared.pop(task_id, None)
        return task_id

    def list_tasks(self) -> list[dict]:
        entries = []
        for path in sorted((self.root / "tasks").iterdir()):
            if (path / "source.json").exists():
                entries.append({"taskId": path.name})
        return entries

    def prepare_task(self, task_id: str) -> tuple:
        with self._lock:
            if task_id in self._prepared:
                return self._prepared[task_id]
        task_dir = self.root / "tasks" / task_id
        if not (task_dir / "source.json").exists():
            raise SessionError(f"unknown task {task_id!r}", status=404)
        from .ontology import load_task_dir

        task = load_task_dir(task_dir)
        computer = FeatureComputer(ProviderPair.from_task_dir(task_dir))
        candidates = generate_candidates(task, computer)
        lexicon = SynonymLexicon.from_task_dir(task_dir)
        with self._lock:
            self._prepared[task_id] = (task, candidates, computer, lexicon)
        return self._prepared[task_id]

    # -- sessions -------------------------------------------------------

    def create_session(self, task_id: str, config: SessionConfig) -> Session:
        task, candidates, computer, lexicon = self.prepare_task(task_id)
        session_id = uuid.uuid4().hex[:12]
        directory = self.root / "sessions" / session_id
        session = Session.create(session_id, task_id, task, candidates, computer, config,
                                 directory, lexicon=lexicon)
        with self._lock:
            self.sessions[session_id] = session
        return session

    def get_session(self, session_id: str) -> Session:
        with self._lock:
            if session_id in self.sessions:
                return self.sessions[session_id]
        directory = self.root / "sessions" / session_id
        if not (directory / "header.json").exists():
            raise SessionError(f"unknown session {session_id!r}", status=404)
        header = json.loads((directory / "header.json").read_text())
        task, candidates, computer, lexicon = self.prepare_task(header["task_id"])
        session = Session.restore(directory, header["task_id"], task, candidates, computer,
                                  lexicon=lexicon)
        with self._lock:
            self.sessions[session_id] = session
        return session
