"""Curation, weighting, and prediction of the labeling-function voting committee.

The committee is a deterministic weighted vote: a pair's score is the weight
share of members voting match among members that did not abstain. Curated mode
selects a prefix of the F1-sorted functions and weights each by its annotated
precision; uniform mode (the bootstrap, and the ensemble ablation) keeps every
function at equal weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .labeling import ABSTAIN, MATCH

W0 = 0.7
EPSILON_WEIGHT = 0.01
TAU = 0.5
MIN_COMMITTEE = 3


@dataclass(frozen=True)
class CommitteePrediction:
    pair_id: tuple[str, str]
    y: int
    p: float
    match_votes: int
    all_abstain: bool = False


@dataclass(frozen=True)
class CommitteeModel:
    member_ids: tuple[str, ...]
    weights: tuple[float, ...]
    mode: str  # "uniform" | "curated"
    fitted_from: int = 0
    tau: float = TAU

    def __post_init__(self):
        if len(self.member_ids) != len(self.weights):
            raise ValueError("one weight per member required")
        if any(w <= 0 for w in self.weights):
            raise ValueError("weights must be positive")

    def weight_of(self, member_id: str) -> float:
        return self.weights[self.member_ids.index(member_id)]

    def to_snapshot(self) -> dict:
        return {
            "mode": self.mode,
            "members": list(self.member_ids),
            "weights": [round(w, 6) for w in self.weights],
            "fitted_from": self.fitted_from,
        }


def committee_scores(votes: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Score columns of a (members x pairs) vote matrix.

    Returns (p, covered): p is the weighted share of match votes among
    non-abstaining members, 0 where every member abstained; covered marks
    columns with at least one non-abstaining vote.
    """
    votes = np.asarray(votes)
    weights = np.asarray(weights, dtype=np.float64)
    numerator = weights @ (votes == MATCH)
    denominator = weights @ (votes != ABSTAIN)
    covered = denominator > 0
    p = np.zeros(votes.shape[1], dtype=np.float64)
    np.divide(numerator, denominator, out=p, where=covered)
    return p, covered


def predict_scores(model: CommitteeModel, votes: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(yhat, p, covered) for columns of a vote matrix aligned with the members."""
    p, covered = committee_scores(votes, np.array(model.weights))
    yhat = (p >= model.tau).astype(np.int8)
    return yhat, p, covered


def predict(model: CommitteeModel, pair_id: tuple[str, str], votes_by_member: dict[str, int]) -> CommitteePrediction:
    """Single-pair prediction from per-member votes."""
    column = np.array([[votes_by_member[m]] for m in model.member_ids], dtype=np.int8)
    yhat, p, covered = predict_scores(model, column)
    return CommitteePrediction(
        pair_id=pair_id,
        y=int(yhat[0]),
        p=float(p[0]),
        match_votes=int(np.sum(column == MATCH)),
        all_abstain=not bool(covered[0]),
    )


def _row_precisions_f1(votes: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-row (precision, F1) against labels, abstentions excluded."""
    votes = np.asarray(votes)
    positive = np.asarray(labels) == 1
    voted_match = votes == MATCH
    voted_no = votes == 0
    tp = (voted_match & positive).sum(axis=1).astype(np.float64)
    fp = (voted_match & ~positive).sum(axis=1).astype(np.float64)
    fn = (voted_no & positive).sum(axis=1).astype(np.float64)
    precision = np.divide(tp, tp + fp, out=np.zeros_like(tp), where=(tp + fp) > 0)
    recall = np.divide(tp, tp + fn, out=np.zeros_like(tp), where=(tp + fn) > 0)
    pr = precision + recall
    f1 = np.divide(2 * precision * recall, pr, out=np.zeros_like(tp), where=pr > 0)
    return precision, f1


def _f1_of_predictions(yhat: np.ndarray, labels: np.ndarray) -> float:
    positive = np.asarray(labels) == 1
    predicted = np.asarray(yhat).astype(bool)
    tp = float(np.sum(predicted & positive))
    fp = float(np.sum(predicted & ~positive))
    fn = float(np.sum(~predicted & positive))
    denominator = 2 * tp + fp + fn
    return 2 * tp / denominator if denominator else 0.0


def weight_functions(votes_on_annotations: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-function weight: W0 times annotated precision, floored at epsilon."""
    precision, _ = _row_precisions_f1(votes_on_annotations, labels)
    return np.where(precision > 0, W0 * precision, EPSILON_WEIGHT)


def committee_f1_on(votes_on_annotations: np.ndarray, labels: np.ndarray) -> float:
    """F1 of a committee (weights fitted from the same annotations) against them."""
    weights = weight_functions(votes_on_annotations, labels)
    p, _ = committee_scores(votes_on_annotations, weights)
    return _f1_of_predictions(p >= TAU, labels)


def select_committee(lf_ids: list[str], votes_on_annotations: np.ndarray, labels: np.ndarray) -> list[int]:
    """Indices of the selected prefix of the F1-sorted functions.

    Functions are sorted by their individual F1 on the annotations (ties by
    ascending id). The prefix starts at three members and is extended only
    while each extension strictly improves the committee F1; the first
    non-improving extension stops the search. Prefix F1 values are evaluated
    with cumulative weight sums, which is exactly the per-prefix fit because a
    member's weight does not depend on its committee.
    """
    count = len(lf_ids)
    votes_on_annotations = np.asarray(votes_on_annotations)
    labels = np.asarray(labels)
    _, f1 = _row_precisions_f1(votes_on_annotations, labels)
    order = [i for _, _, i in sorted((-f1[i], lf_ids[i], i) for i in range(count))]
    if count <= MIN_COMMITTEE:
        return order
    ordered_votes = votes_on_annotations[order]
    weights = weight_functions(ordered_votes, labels)
    numerator = np.cumsum(weights[:, None] * (ordered_votes == MATCH), axis=0)
    denominator = np.cumsum(weights[:, None] * (ordered_votes != ABSTAIN), axis=0)
    p = np.divide(numerator, denominator, out=np.zeros_like(numerator), where=denominator > 0)
    positive = labels == 1
    predicted = p >= TAU
    tp = (predicted & positive).sum(axis=1).astype(np.float64)
    fp = (predicted & ~positive).sum(axis=1).astype(np.float64)
    fn = ((~predicted) & positive).sum(axis=1).astype(np.float64)
    denom = 2 * tp + fp + fn
    prefix_f1 = np.divide(2 * tp, denom, out=np.zeros_like(tp), where=denom > 0)
    k = MIN_COMMITTEE
    previous = prefix_f1[MIN_COMMITTEE - 1]
    for j in range(MIN_COMMITTEE + 1, count + 1):
        current = prefix_f1[j - 1]
        if current > previous:
            k = j
            previous = current
        else:
            break
    return order[:k]


def uniform_committee(lf_ids: list[str]) -> CommitteeModel:
    return CommitteeModel(
        member_ids=tuple(lf_ids),
        weights=tuple(W0 for _ in lf_ids),
        mode="uniform",
    )


def fit_committee(lf_ids: list[str], votes_on_annotations: np.ndarray, labels: np.ndarray) -> CommitteeModel:
    """Curated committee from annotations; uniform fallback while no function scores.

    The curated mode only engages once at least one function has a nonzero F1
    on the annotations; before that there is no signal to sort or weight by.
    """
    labels = np.asarray(labels, dtype=np.int8)
    _, f1 = _row_precisions_f1(votes_on_annotations, labels)
    if not np.any(f1 > 0):
        return uniform_committee(lf_ids)
    selected = select_committee(lf_ids, votes_on_annotations, labels)
    weights = weight_functions(votes_on_annotations[selected], labels)
    return CommitteeModel(
        member_ids=tuple(lf_ids[i] for i in selected),
        weights=tuple(float(w) for w in weights),
        mode="curated",
        fitted_from=int(len(labels)),
    )
