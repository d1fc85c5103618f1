import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dualmatch.metrics import (
    FEATURE_NAMES,
    cosine_similarity,
    embedding_distance,
    fixed_feature_vector,
    hamming_distance,
    levenshtein_distance,
    word_overlap_distance,
)
from tests.conftest import make_class

texts = st.text(alphabet=st.characters(min_codepoint=32, max_codepoint=300), max_size=24)


def test_cosine_identical_vectors():
    v = np.array([0.3, -0.2, 1.5])
    assert cosine_similarity(v, v) == 1.0


def test_cosine_orthogonal():
    assert cosine_similarity(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0


def test_cosine_hand_computed():
    value = cosine_similarity(np.array([1.0, 0.0]), np.array([1.0, 1.0]))
    assert value == pytest.approx(1 / math.sqrt(2), abs=1e-6)


def test_cosine_zero_vector_is_zero():
    assert cosine_similarity(np.zeros(3), np.array([1.0, 2.0, 3.0])) == 0.0


def test_cosine_dimension_mismatch():
    with pytest.raises(ValueError):
        cosine_similarity(np.zeros(3), np.zeros(4))


@pytest.mark.parametrize(
    "a,b,expected",
    [
        ("Paper", "Paper", 0.0),
        ("Paper", "Papers", 1 / 6),  # one insertion over max length 6
        ("", "abc", 1.0),
        ("abc", "", 1.0),
        ("", "", 0.0),
        ("kitten", "sitting", 3 / 7),
    ],
)
def test_levenshtein(a, b, expected):
    assert levenshtein_distance(a, b) == pytest.approx(expected)


@pytest.mark.parametrize(
    "a,b,expected",
    [
        ("abc", "abc", 0.0),
        ("abc", "abd", 1 / 3),
        ("ab", "abcd", 0.5),  # 0 mismatches + 2 length difference over 4
        ("", "", 0.0),
        ("", "xy", 1.0),
    ],
)
def test_hamming(a, b, expected):
    assert hamming_distance(a, b) == pytest.approx(expected)


@pytest.mark.parametrize(
    "a,b,expected",
    [
        ("Conference Paper", "Paper", 0.5),  # token sets {conference,paper} vs {paper}
        ("Paper", "paper", 0.0),
        ("alpha beta", "gamma delta", 1.0),
        ("", "", 1.0),
    ],
)
def test_word_overlap(a, b, expected):
    assert word_overlap_distance(a, b) == pytest.approx(expected)


@given(texts, texts)
def test_string_metrics_symmetric_and_in_range(a, b):
    for metric in (levenshtein_distance, hamming_distance, word_overlap_distance):
        forward = metric(a, b)
        assert 0.0 <= forward <= 1.0
        assert forward == metric(b, a)


@given(texts)
def test_string_metric_identity(text):
    assert levenshtein_distance(text, text) == 0.0
    assert hamming_distance(text, text) == 0.0


def test_embedding_distance_empty_is_maximal(providers):
    empty = providers.a.embed("")
    full = providers.a.embed("Paper")
    assert embedding_distance(empty, full) == 1.0
    assert embedding_distance(empty, empty) == 1.0


def test_embedding_distance_identical_is_zero(providers):
    v = providers.a.embed("Paper")
    assert embedding_distance(v, v.copy()) == 0.0


def test_fixed_vector_identical_classes_all_zero(providers):
    record = make_class("s#A", "ConferencePaper", label="conference paper", comment="a paper")
    twin = make_class("t#A", "ConferencePaper", label="conference paper", comment="a paper")
    vector = fixed_feature_vector(record, twin, providers)
    assert all(vector[name] == 0.0 for name in FEATURE_NAMES)


def test_fixed_vector_empty_comment_components(providers):
    a = make_class("s#A", "Paper", label="paper")
    b = make_class("t#A", "Paper", label="paper")
    vector = fixed_feature_vector(a, b, providers)
    assert vector.emb_comment_a == 1.0
    assert vector.emb_comment_b == 1.0
    assert vector.lev_name == 0.0


def test_fixed_vector_shape_and_order(providers):
    a = make_class("s#A", "Paper")
    b = make_class("t#B", "Review")
    vector = fixed_feature_vector(a, b, providers)
    array = vector.as_array()
    assert array.shape == (9,)
    assert FEATURE_NAMES == (
        "emb_name_a", "emb_name_b", "emb_label_a", "emb_label_b",
        "emb_comment_a", "emb_comment_b", "lev_name", "ham_name", "overlap_name",
    )
    for position, name in enumerate(FEATURE_NAMES):
        assert array[position] == vector[name]
    assert all(0.0 <= array[i] <= 1.0 for i in range(9))


def test_fixed_vector_deterministic(providers, computer):
    a = make_class("s#A", "ConferenceEvent", label="event", comment="something happening")
    b = make_class("t#B", "Happening", label="event")
    first = computer.vector(a, b).as_array()
    second = computer.vector(a, b).as_array()
    third = fixed_feature_vector(a, b, providers).as_array()
    assert np.array_equal(first, second)
    assert np.array_equal(first, third)
