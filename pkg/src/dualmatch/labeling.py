"""Weak labeling functions and the annotation store.

Two kinds of functions vote on candidate pairs: fifteen initial heuristics
with static logic (conservative, may abstain) and tunable functions defined by
a distance metric plus threshold (full coverage, never abstain). Votes are
MATCH (1), NO_MATCH (0), or ABSTAIN (-1).

Initial-function conventions: equality-style checks vote 1 on their positive
condition and abstain otherwise (absence of equality is not evidence against a
match); graded checks vote over three bands (match / undecided / no-match) and
abstain when their attribute is missing.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable

from .metrics import FeatureVector
from .ontology import ClassRecord
from .textutil import acronym, local_name, stem_tokens, tokenize

MATCH = 1
NO_MATCH = 0
ABSTAIN = -1

# Bands for the graded initial functions ("safe threshold" defaults).
NAME_SIM_MATCH = 0.90
NAME_SIM_UNDECIDED = 0.75
EMB_DIST_MATCH = 0.15
EMB_DIST_UNDECIDED = 0.35
TOKEN_JACCARD_MATCH = 0.8
OVERLAP_MIN_SHARED = 2
OVERLAP_JACCARD = 0.5


class MetricUnavailableError(RuntimeError):
    """A tunable function was asked to vote without a metric value."""


VoteFn = Callable[[ClassRecord, ClassRecord, FeatureVector], int]


@dataclass(frozen=True)
class InitialLF:
    id: str
    _fn: VoteFn

    kind = "initial"

    def vote(self, source: ClassRecord, target: ClassRecord, features: FeatureVector) -> int:
        return self._fn(source, target, features)


@dataclass(frozen=True)
class TunableLF:
    """Votes match iff the metric value is at or below the threshold."""

    metric_id: str
    threshold: float

    kind = "tunable"

    @property
    def id(self) -> str:
        return f"LF_tunable_{self.metric_id}"

    def vote_on_value(self, value: float | None) -> int:
        if value is None:
            raise MetricUnavailableError(f"{self.id}: no value for metric {self.metric_id!r}")
        return MATCH if value <= self.threshold else NO_MATCH


def _jaccard(a: set, b: set) -> float:
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)


@lru_cache(maxsize=None)
def _normalized_set(items: frozenset[str]) -> frozenset[str]:
    return frozenset({"".join(tokenize(local_name(item))) for item in items} - {""})


def _name_equal(s: ClassRecord, t: ClassRecord, f: FeatureVector) -> int:
    return MATCH if s.name.lower() == t.name.lower() else ABSTAIN


def _name_stemmed_equal(s: ClassRecord, t: ClassRecord, f: FeatureVector) -> int:
    stems_s = sorted(stem_tokens(s.name_tokens()))
    stems_t = sorted(stem_tokens(t.name_tokens()))
    if not stems_s or not stems_t:
        return ABSTAIN
    return MATCH if stems_s == stems_t else ABSTAIN


def _acronyms(s: ClassRecord, t: ClassRecord, f: FeatureVector) -> int:
    tokens_s, tokens_t = s.name_tokens(), t.name_tokens()
    if len(tokens_s) < 2 or len(tokens_t) < 2:
        return ABSTAIN
    acr_s, acr_t = acronym(tokens_s), acronym(tokens_t)
    if acr_s == acr_t:
        return MATCH
    if acr_s == "".join(tokens_t) or acr_t == "".join(tokens_s):
        return MATCH
    return ABSTAIN


def _label_equal(s: ClassRecord, t: ClassRecord, f: FeatureVector) -> int:
    if not s.label or not t.label:
        return ABSTAIN
    return MATCH if s.label.lower() == t.label.lower() else ABSTAIN


def _root_nouns_equal(s: ClassRecord, t: ClassRecord, f: FeatureVector) -> int:
    tokens_s, tokens_t = s.name_tokens(), t.name_tokens()
    if not tokens_s or not tokens_t:
        return ABSTAIN
    return MATCH if tokens_s[-1] == tokens_t[-1] else ABSTAIN


def _name_distance(s: ClassRecord, t: ClassRecord, f: FeatureVector) -> int:
    similarity = 1.0 - f.lev_name
    if similarity >= NAME_SIM_MATCH:
        return MATCH
    if similarity >= NAME_SIM_UNDECIDED:
        return ABSTAIN
    return NO_MATCH


def _token_overlap(attr_tokens: Callable[[ClassRecord], list[str]]) -> VoteFn:
    def fn(s: ClassRecord, t: ClassRecord, f: FeatureVector) -> int:
        tokens_s, tokens_t = set(attr_tokens(s)), set(attr_tokens(t))
        if not tokens_s or not tokens_t:
            return ABSTAIN
        return MATCH if _jaccard(tokens_s, tokens_t) >= TOKEN_JACCARD_MATCH else NO_MATCH

    return fn


def _set_overlap(attr: str) -> VoteFn:
    def fn(s: ClassRecord, t: ClassRecord, f: FeatureVector) -> int:
        set_s = _normalized_set(getattr(s, attr))
        set_t = _normalized_set(getattr(t, attr))
        if not set_s or not set_t:
            return ABSTAIN
        shared = set_s & set_t
        if len(shared) >= OVERLAP_MIN_SHARED and _jaccard(set_s, set_t) >= OVERLAP_JACCARD:
            return MATCH
        return NO_MATCH

    return fn


def _embedding_bands(feature: str, attr: str | None) -> VoteFn:
    def fn(s: ClassRecord, t: ClassRecord, f: FeatureVector) -> int:
        if attr is not None and (not getattr(s, attr) or not getattr(t, attr)):
            return ABSTAIN
        distance = f[feature]
        if distance <= EMB_DIST_MATCH:
            return MATCH
        if distance <= EMB_DIST_UNDECIDED:
            return ABSTAIN
        return NO_MATCH

    return fn


class SynonymLexicon:
    """Token-level synonym classes loaded from a JSON map token -> [synonyms]."""

    def __init__(self, entries: dict[str, list[str]]):
        self._canonical: dict[str, str] = {}
        groups: dict[str, set[str]] = {}
        for token, synonyms in entries.items():
            members = {token.lower(), *(s.lower() for s in synonyms)}
            merged = set(members)
            for member in members:
                if member in self._canonical:
                    merged |= groups[self._canonical[member]]
            root = min(merged)
            groups[root] = merged
            for member in merged:
                self._canonical[member] = root

    @classmethod
    def from_file(cls, path: str | Path) -> "SynonymLexicon":
        return cls(json.loads(Path(path).read_text()))

    @classmethod
    def from_task_dir(cls, path: str | Path) -> "SynonymLexicon | None":
        """Load the optional synonyms.json sitting next to the ontologies."""
        lexicon_file = Path(path) / "synonyms.json"
        if lexicon_file.exists():
            return cls.from_file(lexicon_file)
        return None

    def canonical(self, token: str) -> str | None:
        return self._canonical.get(token.lower())

    def canonical_tokens(self, tokens: list[str]) -> tuple[list[str], bool]:
        mapped_any = False
        result = []
        for token in tokens:
            root = self._canonical.get(token)
            if root is not None:
                mapped_any = True
                result.append(root)
            else:
                result.append(token)
        return result, mapped_any


def _name_synonyms(lexicon: SynonymLexicon | None) -> VoteFn:
    def fn(s: ClassRecord, t: ClassRecord, f: FeatureVector) -> int:
        if lexicon is None:
            return ABSTAIN
        canon_s, mapped_s = lexicon.canonical_tokens(s.name_tokens())
        canon_t, mapped_t = lexicon.canonical_tokens(t.name_tokens())
        if not (mapped_s or mapped_t):
            return ABSTAIN
        return MATCH if sorted(canon_s) == sorted(canon_t) else ABSTAIN

    return fn


def initial_labeling_functions(lexicon: SynonymLexicon | None = None) -> list[InitialLF]:
    """The fifteen initial functions, in fixed order."""
    return [
        InitialLF("LF_class_name_equal", _name_equal),
        InitialLF("LF_class_name_stemmed_equal", _name_stemmed_equal),
        InitialLF("LF_acronyms", _acronyms),
        InitialLF("LF_class_name_synonyms", _name_synonyms(lexicon)),
        InitialLF("LF_label_equal", _label_equal),
        InitialLF("LF_root_nouns_equal", _root_nouns_equal),
        InitialLF("LF_class_name_distance", _name_distance),
        InitialLF("LF_name_segment_overlap", _token_overlap(lambda c: c.name_tokens())),
        InitialLF("LF_label_words_overlap", _token_overlap(lambda c: c.label_tokens())),
        InitialLF("LF_subclasses_overlap", _set_overlap("subclasses")),
        InitialLF("LF_superclasses_overlap", _set_overlap("superclasses")),
        InitialLF("LF_properties_overlap", _set_overlap("properties")),
        InitialLF("LF_class_name_similarity", _embedding_bands("emb_name_b", None)),
        InitialLF("LF_label_similarity", _embedding_bands("emb_label_b", "label")),
        InitialLF("LF_comment_similarity", _embedding_bands("emb_comment_b", "comment")),
    ]


def evaluate_initial_lf(
    id: str,
    source: ClassRecord,
    target: ClassRecord,
    features: FeatureVector,
    lexicon: SynonymLexicon | None = None,
) -> int:
    for lf in initial_labeling_functions(lexicon):
        if lf.id == id:
            return lf.vote(source, target, features)
    raise KeyError(f"unknown initial labeling function {id!r}")


def evaluate_tunable_lf(metric_id: str, threshold: float, value: float | None) -> int:
    return TunableLF(metric_id, threshold).vote_on_value(value)


class AnnotationStore:
    """Append-only map pair-id -> true label, preserving insertion order.

    One writer (the query loop) and concurrent snapshot readers (threshold
    tuning) are supported.
    """

    def __init__(self):
        self._labels: dict[tuple[str, str], int] = {}
        self._lock = threading.Lock()

    def annotate(self, pair_id: tuple[str, str], label: int) -> None:
        if label not in (0, 1):
            raise ValueError(f"annotation label must be 0 or 1, got {label!r}")
        with self._lock:
            if pair_id in self._labels:
                raise ValueError(f"pair {pair_id!r} is already annotated")
            self._labels[pair_id] = label

    def snapshot(self) -> list[tuple[tuple[str, str], int]]:
        with self._lock:
            return list(self._labels.items())

    def label(self, pair_id: tuple[str, str]) -> int | None:
        with self._lock:
            return self._labels.get(pair_id)

    def __contains__(self, pair_id: tuple[str, str]) -> bool:
        with self._lock:
            return pair_id in self._labels

    def __len__(self) -> int:
        with self._lock:
            return len(self._labels)


def lf_confusion(votes, labels) -> tuple[int, int, int, int]:
    """(tp, fp, fn, tn) over non-abstaining votes."""
    tp = fp = fn = tn = 0
    for vote, label in zip(votes, labels):
        if vote == ABSTAIN:
            continue
        if vote == MATCH:
            if label == 1:
                tp += 1
            else:
                fp += 1
        else:
            if label == 1:
                fn += 1
            else:
                tn += 1
    return tp, fp, fn, tn


def lf_scores_on_annotations(votes, labels) -> tuple[float, float, float]:
    """(precision, recall, F1) with abstentions excluded; 0 on empty denominators."""
    tp, fp, fn, _ = lf_confusion(votes, labels)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1
