import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dualmatch.committee import (
    EPSILON_WEIGHT,
    W0,
    CommitteeModel,
    committee_f1_on,
    committee_scores,
    fit_committee,
    predict,
    select_committee,
    uniform_committee,
    weight_functions,
)
from dualmatch.labeling import ABSTAIN


def test_weight_is_w0_times_precision():
    votes = np.array([[1, 1, 0, 0]], dtype=np.int8)  # precision 1.0
    labels = np.array([1, 1, 0, 0])
    assert weight_functions(votes, labels)[0] == pytest.approx(0.7)
    votes = np.array([[1, 1, 1, 1, 1]], dtype=np.int8)  # 4 TP, 1 FP
    labels = np.array([1, 1, 1, 1, 0])
    assert weight_functions(votes, labels)[0] == pytest.approx(0.7 * 0.8)


def test_zero_precision_gets_epsilon():
    votes = np.array([[1, 1]], dtype=np.int8)
    labels = np.array([0, 0])
    assert weight_functions(votes, labels)[0] == EPSILON_WEIGHT


def test_epsilon_member_barely_moves_predictions():
    # a zero-precision member kept at epsilon leaves committee output unchanged
    # at three decimals on a committee-of-fifteen toy fit
    strong = np.array([1, 0, 1, 0, 1, 0], dtype=np.int8)
    weak = np.array([-1, 1, -1, 1, -1, 1], dtype=np.int8)  # fires only on negatives
    labels = np.array([1, 0, 1, 0, 1, 0])
    votes = np.vstack([strong] * 15 + [weak])
    weights = weight_functions(votes, labels)
    assert weights[-1] == EPSILON_WEIGHT
    p_with, _ = committee_scores(votes, weights)
    p_without, _ = committee_scores(votes[:15], weights[:15])
    assert np.all(np.abs(p_with - p_without) < 1e-3)


def test_predict_all_match():
    model = CommitteeModel(("a", "b"), (0.7, 0.7), "uniform")
    result = predict(model, ("s", "t"), {"a": 1, "b": 1})
    assert result.y == 1 and result.p == 1.0 and result.match_votes == 2


def test_predict_all_abstain_flagged():
    model = CommitteeModel(("a", "b"), (0.7, 0.7), "uniform")
    result = predict(model, ("s", "t"), {"a": ABSTAIN, "b": ABSTAIN})
    assert result.y == 0 and result.p == 0.0 and result.all_abstain


def test_predict_weighted_vote_arithmetic():
    model = CommitteeModel(("a", "b"), (0.7, 0.35), "curated")
    result = predict(model, ("s", "t"), {"a": 1, "b": 0})
    assert result.p == pytest.approx(0.7 / 1.05)
    assert result.y == 1


def test_committee_f1_matches_hand_computation():
    # three members over a ten-pair annotation set, scored against an
    # exhaustive confusion-matrix computation
    rng = np.random.default_rng(7)
    votes = rng.choice([-1, 0, 1], size=(3, 10)).astype(np.int8)
    labels = rng.integers(0, 2, size=10)
    weights = weight_functions(votes, labels)

    def brute_f1():
        tp = fp = fn = 0
        for col in range(10):
            numerator = sum(w for w, v in zip(weights, votes[:, col]) if v == 1)
            denominator = sum(w for w, v in zip(weights, votes[:, col]) if v != -1)
            p = numerator / denominator if denominator > 0 else 0.0
            yhat = 1 if p >= 0.5 else 0
            if yhat == 1 and labels[col] == 1:
                tp += 1
            elif yhat == 1:
                fp += 1
            elif labels[col] == 1:
                fn += 1
        return 2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) else 0.0

    assert committee_f1_on(votes, labels) == pytest.approx(brute_f1())


def test_committee_f1_perfect_and_zero():
    votes = np.array([[1, 0, 1, 0]], dtype=np.int8)
    labels = np.array([1, 0, 1, 0])
    assert committee_f1_on(votes, labels) == 1.0
    all_zero = np.array([[0, 0, 0, 0]], dtype=np.int8)
    assert committee_f1_on(all_zero, labels) == 0.0


def test_select_committee_small_family_takes_all():
    votes = np.array([[1, 0], [0, 1], [1, 1]], dtype=np.int8)
    labels = np.array([1, 0])
    selected = select_committee(["a", "b", "c"], votes, labels)
    assert len(selected) == 3


def test_select_committee_sorted_by_f1_then_id():
    labels = np.array([1, 1, 0, 0])
    perfect = np.array([1, 1, 0, 0], dtype=np.int8)
    noisy = np.array([1, 0, 1, 0], dtype=np.int8)
    votes = np.vstack([noisy, perfect, perfect])
    selected = select_committee(["z_noisy", "b_good", "a_good"], votes, labels)
    assert selected[0] == 2  # a_good before b_good (tie on F1, id ascending)
    assert selected[1] == 1


def test_uniform_committee_equal_weights():
    model = uniform_committee(["a", "b", "c"])
    assert model.mode == "uniform"
    assert len(set(model.weights)) == 1


def test_fit_committee_uniform_until_signal():
    votes = np.full((4, 5), 0, dtype=np.int8)  # nobody ever votes match
    labels = np.array([0, 0, 0, 0, 1])
    model = fit_committee(["a", "b", "c", "d"], votes, labels)
    assert model.mode == "uniform"


def test_fit_committee_curated_prefix():
    labels = np.array([1, 1, 1, 0, 0, 0])
    good = np.array([1, 1, 1, 0, 0, 0], dtype=np.int8)
    ok = np.array([1, 1, 0, 0, 0, 0], dtype=np.int8)
    bad = np.array([0, 0, 0, 1, 1, 1], dtype=np.int8)
    votes = np.vstack([good, ok, bad, bad])
    model = fit_committee(["good", "ok", "bad1", "bad2"], votes, labels)
    assert model.mode == "curated"
    assert model.member_ids[0] == "good"
    assert len(model.member_ids) >= 3
    assert all(0 < w <= W0 for w in model.weights)


@given(
    st.integers(min_value=1, max_value=6),
    st.integers(min_value=1, max_value=30),
    st.floats(min_value=0.01, max_value=100.0),
    st.integers(min_value=0, max_value=2**32 - 1),
)
def test_scale_invariance(members, pairs, scale, seed):
    rng = np.random.default_rng(seed)
    votes = rng.choice([-1, 0, 1], size=(members, pairs)).astype(np.int8)
    weights = rng.uniform(0.05, 0.7, size=members)
    p1, covered1 = committee_scores(votes, weights)
    p2, covered2 = committee_scores(votes, weights * scale)
    assert np.array_equal(covered1, covered2)
    assert np.allclose(p1, p2, atol=1e-9)
    decided = np.abs(p1 - 0.5) > 1e-9
    assert np.array_equal((p1 >= 0.5)[decided], (p2 >= 0.5)[decided])


@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_flipping_vote_to_match_never_decreases_p(seed):
    rng = np.random.default_rng(seed)
    members, pairs = rng.integers(1, 6), rng.integers(1, 10)
    votes = rng.choice([-1, 0, 1], size=(members, pairs)).astype(np.int8)
    weights = rng.uniform(0.05, 0.7, size=members)
    p_before, _ = committee_scores(votes, weights)
    member = rng.integers(0, members)
    column = rng.integers(0, pairs)
    if votes[member, column] != 0:
        return
    votes[member, column] = 1
    p_after, _ = committee_scores(votes, weights)
    assert p_after[column] >= p_before[column] - 1e-12
