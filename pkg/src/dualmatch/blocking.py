"""Key-based top-k blocking that produces the initial candidate set.

Seven blocking keys score (source, target) class pairs: one shared-word count
on names, plus cosine similarity of name/label/comment embeddings under each
provider slot. Every source class contributes its top-k targets per key; the
union of all lists is the candidate set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .metrics import FeatureComputer, FeatureVector
from .ontology import ClassRecord, MatchTask, OntologySchema

TOP_K_CAP = 50

KEY_IDS = (
    "num_common_words",
    "class_name_words_similarity_a",
    "class_name_words_similarity_b",
    "label_words_similarity_a",
    "label_words_similarity_b",
    "comment_similarity_a",
    "comment_similarity_b",
)


def choose_k(target_count: int) -> int:
    """Top-k size: capped at 50 for large target ontologies, else all targets."""
    if target_count < 1:
        raise ValueError("target ontology must have at least one class")
    return TOP_K_CAP if target_count > TOP_K_CAP else target_count


class BlockingKey:
    """A similarity score over class pairs; higher means more similar.

    Pairs where the key's attribute is empty on either side score -1 so they
    rank behind every real score.
    """

    def __init__(self, id: str, computer: FeatureComputer, attribute: str | None, slot: str | None):
        self.id = id
        self._computer = computer
        self._attribute = attribute
        self._slot = slot
        self._target_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def score(self, source: ClassRecord, target: ClassRecord) -> float:
        if self._attribute is None:
            return float(len(set(source.name_tokens()) & set(target.name_tokens())))
        if not getattr(source, self._attribute) or not getattr(target, self._attribute):
            return -1.0
        u = self._computer.attribute_vector(source, self._attribute, self._slot)
        v = self._computer.attribute_vector(target, self._attribute, self._slot)
        norm = np.linalg.norm(u) * np.linalg.norm(v)
        if norm == 0:
            return -1.0
        return float(np.dot(u, v) / norm)

    def score_row(self, source: ClassRecord, targets: OntologySchema) -> np.ndarray:
        """Scores against every target class, in schema (iri-sorted) order."""
        if self._attribute is None:
            source_tokens = set(source.name_tokens())
            return np.array(
                [float(len(source_tokens & set(t.name_tokens()))) for t in targets],
                dtype=np.float64,
            )
        matrix, nonempty = self._target_matrix(targets)
        if not getattr(source, self._attribute):
            return np.full(len(targets), -1.0)
        u = self._computer.attribute_vector(source, self._attribute, self._slot)
        norm_u = np.linalg.norm(u)
        if norm_u == 0:
            return np.full(len(targets), -1.0)
        scores = matrix @ (u / norm_u)
        scores[~nonempty] = -1.0
        return scores

    def _target_matrix(self, targets: OntologySchema) -> tuple[np.ndarray, np.ndarray]:
        cache_id = id(targets)
        cached = self._target_cache.get(cache_id)
        if cached is None:
            rows = []
            nonempty = []
            for record in targets:
                v = self._computer.attribute_vector(record, self._attribute, self._slot)
                norm = np.linalg.norm(v)
                rows.append(v / norm if norm > 0 else v)
                nonempty.append(norm > 0 and bool(getattr(record, self._attribute)))
            cached = (np.vstack(rows), np.array(nonempty, dtype=bool))
            self._target_cache[cache_id] = cached
        return cached


def blocking_keys(computer: FeatureComputer) -> list[BlockingKey]:
    """The seven keys, in fixed registry order."""
    keys = [BlockingKey("num_common_words", computer, None, None)]
    for attribute in ("name", "label", "comment"):
        prefix = "class_name_words" if attribute == "name" else (
            "label_words" if attribute == "label" else "comment"
        )
        for slot in ("a", "b"):
            keys.append(BlockingKey(f"{prefix}_similarity_{slot}", computer, attribute, slot))
    return keys


def top_k_for_key(
    source: ClassRecord, targets: OntologySchema, key: BlockingKey, k: int
) -> list[tuple[str, float]]:
    """The k highest-scoring targets; ties broken by ascending target iri."""
    if k > len(targets):
        raise ValueError(f"k={k} exceeds target class count {len(targets)}")
    scores = key.score_row(source, targets)
    order = np.lexsort((np.arange(len(scores)), -scores))
    iris = targets.iris
    return [(iris[i], float(scores[i])) for i in order[:k]]


@dataclass
class CandidatePair:
    source_iri: str
    target_iri: str
    features: FeatureVector | None = None

    @property
    def pair_id(self) -> tuple[str, str]:
        return (self.source_iri, self.target_iri)


@dataclass
class BlockingReport:
    truth_total: int
    admitted: int
    missed: list[tuple[str, str]]

    @property
    def recall(self) -> float:
        return self.admitted / self.truth_total if self.truth_total else 1.0


@dataclass
class CandidateSet:
    pairs: list[CandidatePair]
    provenance: dict[tuple[str, str], str] = field(default_factory=dict)
    report: BlockingReport | None = None

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def pair_ids(self) -> list[tuple[str, str]]:
        return [p.pair_id for p in self.pairs]


def generate_candidates(task: MatchTask, computer: FeatureComputer) -> CandidateSet:
    """Union of per-source, per-key top-k lists, ordered by pair id.

    Provenance records the first key (in registry order) that admitted each
    pair. When ground truth is present, pairs lost to blocking are reported so
    evaluation can keep the full-truth denominator.
    """
    keys = blocking_keys(computer)
    k = choose_k(len(task.target))
    admitted: dict[tuple[str, str], str] = {}
    for source in task.source:
        for key in keys:
            for target_iri, _score in top_k_for_key(source, task.target, key, k):
                pair = (source.iri, target_iri)
                if pair not in admitted:
                    admitted[pair] = key.id
    ordered = sorted(admitted)
    pairs = [CandidatePair(source_iri=s, target_iri=t) for s, t in ordered]
    report = None
    if task.truth is not None:
        missed = sorted(p for p in task.truth.pairs if p not in admitted)
        report = BlockingReport(
            truth_total=len(task.truth),
            admitted=len(task.truth) - len(missed),
            missed=missed,
        )
    return CandidateSet(pairs=pairs, provenance=admitted, report=report)
