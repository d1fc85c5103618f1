"""Embedding providers for class-attribute text.

Two provider slots ("provider-a", "provider-b") feed the similarity keys and
embedding distance metrics. Production deployments export vectors offline into
a JSON-lines sidecar; the built-in character-trigram hashing embedder is the
zero-dependency fallback that keeps the whole pipeline runnable.

Hash scheme of the built-in embedder (fixed; golden-tested):
  - text is lowercased and wrapped as "^text$"
  - every character trigram is hashed with BLAKE2b (digest_size=8,
    person=b"3gram" + salt), where salt distinguishes the two provider slots
  - digest bits: index = first 7 bytes mod dim, sign = lowest bit of last byte
  - the signed trigram counts are L2-normalized
Empty text maps to the zero vector (the "empty" flag) under every provider.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .ontology import ClassRecord


class MissingEmbeddingError(KeyError):
    """A file-backed provider has no vector for the requested key."""

    def __init__(self, key: str):
        super().__init__(key)
        self.key = key

    def __str__(self) -> str:
        return f"no embedding stored for key {self.key!r}"


def sidecar_key(iri: str, attribute: str, provider_id: str) -> str:
    return f"{iri}|{attribute}|{provider_id}"


def is_empty_vector(vector: np.ndarray) -> bool:
    return not np.any(vector)


class HashingEmbedder:
    """Deterministic character-trigram hashing embedder (see module docstring)."""

    def __init__(self, id: str, dimensionality: int = 256, salt: str = ""):
        self.id = id
        self.dimensionality = dimensionality
        self._person = (b"3gram" + salt.encode("utf-8"))[:16]

    def embed(self, text: str, key: str | None = None) -> np.ndarray:
        vector = np.zeros(self.dimensionality, dtype=np.float64)
        if not text:
            return vector
        padded = "^" + text.lower() + "$"
        if len(padded) < 3:
            grams = [padded]
        else:
            grams = [padded[i : i + 3] for i in range(len(padded) - 2)]
        for gram in grams:
            digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8, person=self._person).digest()
            index = int.from_bytes(digest[:7], "big") % self.dimensionality
            sign = 1.0 if digest[7] & 1 else -1.0
            vector[index] += sign
        norm = np.linalg.norm(vector)
        if norm > 0:
            vector /= norm
        return vector


class FileBackedProvider:
    """Vectors exported offline, looked up by "<iri>|<attribute>|<provider-id>" key."""

    def __init__(self, id: str, dimensionality: int, vectors: dict[str, np.ndarray]):
        self.id = id
        self.dimensionality = dimensionality
        self._vectors = vectors

    @classmethod
    def from_sidecar(cls, path: str | Path, provider_id: str) -> "FileBackedProvider":
        vectors: dict[str, np.ndarray] = {}
        dimensionality = 0
        with open(path) as handle:
            for line_no, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                key, values = record["key"], record["vector"]
                if not key.endswith(f"|{provider_id}"):
                    continue
                vector = np.asarray(values, dtype=np.float64)
                if dimensionality and vector.shape[0] != dimensionality:
                    raise ValueError(
                        f"{path}:{line_no}: vector for {key!r} has dimensionality "
                        f"{vector.shape[0]}, expected {dimensionality}"
                    )
                dimensionality = vector.shape[0]
                vectors[key] = vector
        if not vectors:
            raise ValueError(f"sidecar {path} holds no vectors for provider {provider_id!r}")
        return cls(provider_id, dimensionality, vectors)

    def embed(self, text: str, key: str | None = None) -> np.ndarray:
        if not text:
            return np.zeros(self.dimensionality, dtype=np.float64)
        if key is None or key not in self._vectors:
            raise MissingEmbeddingError(key if key is not None else "<no key>")
        return self._vectors[key]


class ProviderPair:
    """The two provider slots used by blocking keys and feature metrics."""

    def __init__(self, provider_a, provider_b):
        self.a = provider_a
        self.b = provider_b

    @classmethod
    def builtin(cls, dimensionality: int = 256) -> "ProviderPair":
        return cls(
            HashingEmbedder("provider-a", dimensionality, salt="a"),
            HashingEmbedder("provider-b", dimensionality, salt="b"),
        )

    @classmethod
    def from_task_dir(cls, path: str | Path) -> "ProviderPair":
        """File-backed pair when a sidecar is present, built-in pair otherwise."""
        sidecar = Path(path) / "embeddings.jsonl"
        if sidecar.exists():
            return cls(
                FileBackedProvider.from_sidecar(sidecar, "provider-a"),
                FileBackedProvider.from_sidecar(sidecar, "provider-b"),
            )
        return cls.builtin()

    def attribute_vector(self, provider, record: ClassRecord, attribute: str) -> np.ndarray:
        text = getattr(record, attribute)
        return provider.embed(text, key=sidecar_key(record.iri, attribute, provider.id))


def write_sidecar(path: str | Path, records: list[tuple[str, np.ndarray]]) -> None:
    """Write (key, vector) pairs as a JSON-lines sidecar."""
    with open(path, "w") as handle:
        for key, vector in records:
            handle.write(json.dumps({"key": key, "vector": [float(v) for v in vector]}) + "\n")
