import hashlib

import numpy as np
import pytest

from dualmatch.embeddings import (
    FileBackedProvider,
    HashingEmbedder,
    MissingEmbeddingError,
    ProviderPair,
    is_empty_vector,
    sidecar_key,
    write_sidecar,
)


def test_empty_text_is_zero_vector():
    embedder = HashingEmbedder("p", 256, salt="a")
    vector = embedder.embed("")
    assert vector.shape == (256,)
    assert is_empty_vector(vector)


def test_deterministic_bitwise():
    embedder = HashingEmbedder("p", 256, salt="a")
    assert np.array_equal(embedder.embed("Paper"), embedder.embed("Paper"))


def test_declared_dimensionality():
    for dim in (16, 256, 300):
        assert HashingEmbedder("p", dim).embed("text").shape == (dim,)


def test_golden_vector_paper():
    # Frozen output of the documented trigram hash scheme for provider-a.
    vector = ProviderPair.builtin().a.embed("Paper")
    assert hashlib.blake2b(vector.tobytes(), digest_size=16).hexdigest() == (
        "2c5cf5552ebb0364b626b2613e70c99e"
    )
    assert np.count_nonzero(vector) == 5
    assert vector[126] == pytest.approx(0.447214, abs=1e-6)
    assert vector[206] == pytest.approx(-0.447214, abs=1e-6)
    assert np.linalg.norm(vector) == pytest.approx(1.0)


def test_provider_slots_differ():
    pair = ProviderPair.builtin()
    assert not np.array_equal(pair.a.embed("Paper"), pair.b.embed("Paper"))


def test_short_text_embeds():
    embedder = HashingEmbedder("p", 64)
    assert not is_empty_vector(embedder.embed("a"))


def test_file_backed_sidecar_roundtrip(tmp_path):
    key = sidecar_key("x#A", "name", "provider-a")
    write_sidecar(tmp_path / "emb.jsonl", [(key, np.array([1.0, 2.0, 3.0]))])
    provider = FileBackedProvider.from_sidecar(tmp_path / "emb.jsonl", "provider-a")
    assert provider.dimensionality == 3
    assert np.array_equal(provider.embed("A", key=key), np.array([1.0, 2.0, 3.0]))


def test_file_backed_missing_key_names_it(tmp_path):
    key = sidecar_key("x#A", "name", "provider-a")
    write_sidecar(tmp_path / "emb.jsonl", [(key, np.array([1.0]))])
    provider = FileBackedProvider.from_sidecar(tmp_path / "emb.jsonl", "provider-a")
    with pytest.raises(MissingEmbeddingError) as err:
        provider.embed("B", key="x#B|name|provider-a")
    assert "x#B|name|provider-a" in str(err.value)


def test_file_backed_empty_text_short_circuits(tmp_path):
    key = sidecar_key("x#A", "name", "provider-a")
    write_sidecar(tmp_path / "emb.jsonl", [(key, np.array([1.0, 0.0]))])
    provider = FileBackedProvider.from_sidecar(tmp_path / "emb.jsonl", "provider-a")
    assert is_empty_vector(provider.embed("", key="anything"))


def test_provider_pair_from_task_dir_prefers_sidecar(tmp_path):
    write_sidecar(
        tmp_path / "embeddings.jsonl",
        [
            (sidecar_key("x#A", "name", "provider-a"), np.array([1.0, 0.0])),
            (sidecar_key("x#A", "name", "provider-b"), np.array([0.0, 1.0])),
        ],
    )
    pair = ProviderPair.from_task_dir(tmp_path)
    assert isinstance(pair.a, FileBackedProvider)
    assert isinstance(pair.b, FileBackedProvider)
    builtin = ProviderPair.from_task_dir(tmp_path / "nope")
    assert isinstance(builtin.a, HashingEmbedder)
