"""Deterministic synthetic matching tasks for benchmarks and tests.

Tasks mirror the imbalance regime of real ontology pairs: a few hundred
classes per side and a fraction of true matches well under one percent of the
candidate set. Matched source classes are perturbed copies of target classes;
the per-pair perturbation strength is drawn uniformly from [0, noise], so a
suite mixes trivial and hard matches.

``match_rate`` is interpreted at candidate scale: the number of true matches
is ``round(match_rate * n_source * min(n_target, 50))``, i.e. relative to the
volume a top-50-per-source blocking pass admits, not to the full cross
product. This keeps the generated imbalance comparable across target sizes.
"""

from __future__ import annotations

import random

from .blocking import TOP_K_CAP
from .ontology import ClassRecord, GroundTruth, MatchTask, OntologySchema

_CONSONANTS = "bcdfghklmnprstvwz"
_VOWELS = "aeiou"
_SUFFIXES = ("s", "al", "ing", "er")


def _vocabulary(rng: random.Random, size: int) -> list[str]:
    syllables = [c + v for c in _CONSONANTS for v in _VOWELS]
    words: list[str] = []
    seen: set[str] = set()
    while len(words) < size:
        word = "".join(rng.choice(syllables) for _ in range(rng.randint(2, 4)))
        if word not in seen:
            seen.add(word)
            words.append(word)
    return words


def _typo(rng: random.Random, word: str) -> str:
    if len(word) < 3:
        return word + rng.choice(_VOWELS)
    roll = rng.random()
    i = rng.randrange(len(word) - 1)
    if roll < 0.4:  # swap adjacent characters
        return word[:i] + word[i + 1] + word[i] + word[i + 2 :]
    if roll < 0.75:  # substitute one character
        pool = _VOWELS if word[i] in _VOWELS else _CONSONANTS
        return word[:i] + rng.choice(pool) + word[i + 1 :]
    return word[:i] + rng.choice(_VOWELS) + word[i:]  # insert


def _perturb_word(rng: random.Random, word: str, vocab: list[str], strength: float) -> str:
    roll = rng.random()
    if roll < 0.12:
        return rng.choice(vocab)
    if roll < 0.30:
        return word + rng.choice(_SUFFIXES)
    mutated = _typo(rng, word)
    if strength > 0.4 and rng.random() < 0.7:
        mutated = _typo(rng, mutated)
    if strength > 0.75 and rng.random() < 0.5:
        mutated = _typo(rng, mutated)
    return mutated


class _ClassDraft:
    def __init__(self, words: list[str], label_words: list[str] | None,
                 comment_words: list[str] | None, properties: set[str]):
        self.words = words
        self.label_words = label_words
        self.comment_words = comment_words
        self.properties = properties

    def record(self, iri: str) -> ClassRecord:
        return ClassRecord(
            iri=iri,
            name="".join(w.capitalize() for w in self.words),
            label=" ".join(self.label_words) if self.label_words is not None else "",
            comment=" ".join(self.comment_words) if self.comment_words is not None else "",
            properties=frozenset(self.properties),
        )


def _draw_class(
    rng: random.Random,
    vocab: list[str],
    prop_vocab: list[str],
    categories: list[str],
    siblings_of: _ClassDraft | None = None,
) -> _ClassDraft:
    if siblings_of is not None and siblings_of.words:
        # Near-duplicate of an existing class: shares most name words. These
        # hard negatives make naive word-overlap heuristics fire falsely.
        words = list(siblings_of.words)
        words[rng.randrange(len(words))] = rng.choice(vocab)
    else:
        words = [rng.choice(vocab) for _ in range(rng.randint(1, 3))]
        if rng.random() < 0.5:
            words.append(rng.choice(categories))
    label_words = list(words) if rng.random() < 0.85 else None
    comment_words = (
        [rng.choice(vocab) for _ in range(rng.randint(6, 12))] if rng.random() < 0.8 else None
    )
    properties = set(rng.sample(prop_vocab, rng.randint(0, 4)))
    return _ClassDraft(words, label_words, comment_words, properties)


def _perturbed_copy(rng: random.Random, origin: _ClassDraft, strength: float,
                    vocab: list[str], prop_vocab: list[str]) -> _ClassDraft:
    def mutate(words: list[str]) -> list[str]:
        mutated = [
            _perturb_word(rng, w, vocab, strength)
            if rng.random() < min(1.0, strength * 1.3)
            else w
            for w in words
        ]
        if len(mutated) > 1 and rng.random() < strength * 0.3:
            mutated.pop(rng.randrange(len(mutated)))
        if rng.random() < strength * 0.2:
            mutated.append(rng.choice(vocab))
        return mutated or [rng.choice(vocab)]

    words = mutate(origin.words)
    label_words = None
    if origin.label_words is not None:
        label_words = mutate(origin.label_words) if strength > 0 else list(origin.label_words)
    comment_words = None
    if origin.comment_words is not None:
        comment_words = (
            mutate(origin.comment_words) if strength > 0 else list(origin.comment_words)
        )
    properties = {p for p in origin.properties if rng.random() >= strength}
    if rng.random() < strength * 0.7:
        properties.add(rng.choice(prop_vocab))
    return _ClassDraft(words, label_words, comment_words, properties)


def expected_matches(n_source: int, n_target: int, match_rate: float) -> int:
    scale = n_source * min(n_target, TOP_K_CAP)
    return max(1, min(round(match_rate * scale), min(n_source, n_target)))


def generate_synthetic_task(
    seed: int,
    n_source: int,
    n_target: int,
    match_rate: float,
    noise: float,
) -> MatchTask:
    """Build a seeded task with ground truth (see module docstring for sizing)."""
    if not 0 < match_rate <= 0.05:
        raise ValueError("match_rate must be in (0, 0.05]")
    if not 0 <= noise <= 1:
        raise ValueError("noise must be in [0, 1]")
    if n_source < 1 or n_target < 1:
        raise ValueError("both sides need at least one class")

    rng = random.Random(seed)
    vocab = _vocabulary(rng, 1200)
    prop_vocab = _vocabulary(rng, 120)
    categories = _vocabulary(rng, 12)

    target_drafts: list[_ClassDraft] = []
    for _ in range(n_target):
        sibling = (
            rng.choice(target_drafts) if target_drafts and rng.random() < 0.45 else None
        )
        target_drafts.append(_draw_class(rng, vocab, prop_vocab, categories, sibling))
    n_matches = expected_matches(n_source, n_target, match_rate)
    matched_sources = sorted(rng.sample(range(n_source), n_matches))
    matched_targets = rng.sample(range(n_target), n_matches)
    match_of = dict(zip(matched_sources, matched_targets))

    source_records = []
    source_drafts: list[_ClassDraft] = []
    truth_pairs = set()
    for i in range(n_source):
        iri = f"urn:syn{seed}:source#C{i:04d}"
        if i in match_of:
            target_index = match_of[i]
            # Bimodal difficulty: a few trivially-similar matches bootstrap the
            # committee, the bulk sit beyond the conservative heuristics and
            # are only reachable through threshold exploration.
            if noise == 0:
                strength = 0.0
            elif rng.random() < 0.2:
                strength = rng.uniform(0.0, 0.2 * noise)
            else:
                strength = rng.uniform(0.55 * noise, noise)
            draft = _perturbed_copy(rng, target_drafts[target_index], strength, vocab, prop_vocab)
            truth_pairs.add((iri, f"urn:syn{seed}:target#C{target_index:04d}"))
        else:
            sibling = (
                rng.choice(source_drafts) if source_drafts and rng.random() < 0.35 else None
            )
            draft = _draw_class(rng, vocab, prop_vocab, categories, sibling)
        source_drafts.append(draft)
        source_records.append(draft.record(iri))

    target_records = [
        draft.record(f"urn:syn{seed}:target#C{i:04d}") for i, draft in enumerate(target_drafts)
    ]

    task = MatchTask(
        source=OntologySchema(f"syn{seed}-source", source_records),
        target=OntologySchema(f"syn{seed}-target", target_records),
        truth=GroundTruth(pairs=frozenset(truth_pairs)),
    )
    return task
