"""The nine fixed distance metrics computed for every matching candidate.

Six embedding distances (name/label/comment under the two providers) and three
character/token overlap distances on the name attribute. All outputs live in
[0, 1]; an empty attribute yields the maximal distance 1.0 for its embedding
components.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embeddings import ProviderPair
from .ontology import ClassRecord
from .textutil import tokenize

FEATURE_NAMES = (
    "emb_name_a",
    "emb_name_b",
    "emb_label_a",
    "emb_label_b",
    "emb_comment_a",
    "emb_comment_b",
    "lev_name",
    "ham_name",
    "overlap_name",
)

EMBEDDING_FEATURES = FEATURE_NAMES[:6]


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Standard cosine; 0.0 when either vector is all-zero.

    Bitwise-equal nonzero vectors return exactly 1.0 so that identical text
    always yields zero embedding distance.
    """
    if u.shape != v.shape:
        raise ValueError(f"dimensionality mismatch: {u.shape} vs {v.shape}")
    norm_u = np.linalg.norm(u)
    norm_v = np.linalg.norm(v)
    if norm_u == 0 or norm_v == 0:
        return 0.0
    if np.array_equal(u, v):
        return 1.0
    return float(np.dot(u, v) / (norm_u * norm_v))


def embedding_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 - clamp(cosine, 0, 1); empty (zero) vectors give the maximal distance."""
    if not np.any(u) or not np.any(v):
        return 1.0
    return 1.0 - max(0.0, min(1.0, cosine_similarity(u, v)))


def levenshtein_distance(a: str, b: str) -> float:
    """Edit distance divided by the longer length; 0.0 for two empty strings."""
    if a == b:
        return 0.0
    if not a or not b:
        return 1.0
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a):
        current = [i + 1]
        for j, cb in enumerate(b):
            current.append(min(previous[j + 1] + 1, current[j] + 1, previous[j] + (ca != cb)))
        previous = current
    return previous[-1] / len(a)


def hamming_distance(a: str, b: str) -> float:
    """Positionwise mismatches plus the length difference, over the longer length."""
    if not a and not b:
        return 0.0
    shorter, longer = min(len(a), len(b)), max(len(a), len(b))
    mismatches = sum(ca != cb for ca, cb in zip(a, b))
    return (mismatches + longer - shorter) / longer


def word_overlap_distance(a: str, b: str) -> float:
    """1 - shared-token count over the larger token-set size; 1.0 when both empty."""
    tokens_a, tokens_b = set(tokenize(a)), set(tokenize(b))
    if not tokens_a and not tokens_b:
        return 1.0
    larger = max(len(tokens_a), len(tokens_b))
    return 1.0 - len(tokens_a & tokens_b) / larger


@dataclass(frozen=True)
class FeatureVector:
    pair_id: tuple[str, str]
    emb_name_a: float
    emb_name_b: float
    emb_label_a: float
    emb_label_b: float
    emb_comment_a: float
    emb_comment_b: float
    lev_name: float
    ham_name: float
    overlap_name: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_NAMES], dtype=np.float64)

    def __getitem__(self, name: str) -> float:
        if name not in FEATURE_NAMES:
            raise KeyError(name)
        return getattr(self, name)


class FeatureComputer:
    """Computes feature vectors for class pairs, caching per-class attribute vectors.

    Safe for concurrent use once warm; population of the per-class cache is the
    only mutation and is idempotent.
    """

    _ATTRIBUTES = ("name", "label", "comment")

    def __init__(self, providers: ProviderPair):
        self.providers = providers
        self._vector_cache: dict[tuple[str, str, str], np.ndarray] = {}

    def attribute_vector(self, record: ClassRecord, attribute: str, slot: str) -> np.ndarray:
        cache_key = (record.iri, attribute, slot)
        cached = self._vector_cache.get(cache_key)
        if cached is None:
            provider = self.providers.a if slot == "a" else self.providers.b
            cached = self.providers.attribute_vector(provider, record, attribute)
            self._vector_cache[cache_key] = cached
        return cached

    def vector(self, source: ClassRecord, target: ClassRecord) -> FeatureVector:
        distances = {}
        for attribute in self._ATTRIBUTES:
            for slot in ("a", "b"):
                distances[f"emb_{attribute}_{slot}"] = embedding_distance(
                    self.attribute_vector(source, attribute, slot),
                    self.attribute_vector(target, attribute, slot),
                )
        return FeatureVector(
            pair_id=(source.iri, target.iri),
            lev_name=levenshtein_distance(source.name, target.name),
            ham_name=hamming_distance(source.name, target.name),
            overlap_name=word_overlap_distance(source.name, target.name),
            **distances,
        )


def fixed_feature_vector(source: ClassRecord, target: ClassRecord, providers: ProviderPair) -> FeatureVector:
    return FeatureComputer(providers).vector(source, target)
