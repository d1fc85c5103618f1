"""Text normalization shared across metrics, blocking keys, and labeling functions.

Class names arrive in many shapes ("ConferencePaper", "conference_paper",
"Conference-Paper"); everything downstream works on the lowercase token list
produced here so the individual heuristics never re-implement splitting.
"""

from __future__ import annotations

import re
from functools import lru_cache

_TOKEN_RE = re.compile(
    r"[A-Z]+(?=[A-Z][a-z])"  # acronym run followed by a capitalized word: HTTPServer -> HTTP
    r"|[A-Z]?[a-z]+"         # Capitalized or lowercase word
    r"|[A-Z]+"               # trailing acronym run
    r"|\d+"                  # digit run
)


@lru_cache(maxsize=None)
def tokenize(text: str) -> tuple[str, ...]:
    """Split on camelCase boundaries, underscores, hyphens, and whitespace; lowercase."""
    if not text:
        return ()
    tokens: list[str] = []
    for chunk in re.split(r"[\s_\-]+", text):
        tokens.extend(m.group(0).lower() for m in _TOKEN_RE.finditer(chunk))
    return tuple(tokens)


def acronym(tokens: tuple[str, ...] | list[str]) -> str:
    """Concatenated initials of the tokens ("program", "committee" -> "pc")."""
    return "".join(t[0] for t in tokens if t)


def local_name(iri: str) -> str:
    """Local part of an IRI: the fragment after '#', else the last path segment."""
    if "#" in iri:
        return iri.rsplit("#", 1)[1]
    return iri.rstrip("/").rsplit("/", 1)[-1]


# ---------------------------------------------------------------------------
# Porter stemmer
# ---------------------------------------------------------------------------
# Direct implementation of the classic suffix-stripping algorithm (Porter,
# 1980). Behavior is pinned by golden tests; do not "fix" edge cases here
# without updating those fixtures.

_VOWELS = "aeiou"


def _is_consonant(word: str, i: int) -> bool:
    ch = word[i]
    if ch in _VOWELS:
        return False
    if ch == "y":
        return i == 0 or not _is_consonant(word, i - 1)
    return True


def _measure(stem: str) -> int:
    """Number of vowel-consonant sequences in the stem."""
    m = 0
    prev_vowel = False
    for i in range(len(stem)):
        if _is_consonant(stem, i):
            if prev_vowel:
                m += 1
            prev_vowel = False
        else:
            prev_vowel = True
    return m


def _contains_vowel(stem: str) -> bool:
    return any(not _is_consonant(stem, i) for i in range(len(stem)))


def _ends_double_consonant(word: str) -> bool:
    return (
        len(word) >= 2
        and word[-1] == word[-2]
        and _is_consonant(word, len(word) - 1)
    )


def _ends_cvc(word: str) -> bool:
    if len(word) < 3:
        return False
    return (
        _is_consonant(word, len(word) - 3)
        and not _is_consonant(word, len(word) - 2)
        and _is_consonant(word, len(word) - 1)
        and word[-1] not in "wxy"
    )


_STEP2_SUFFIXES = [
    ("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
    ("izer", "ize"), ("abli", "able"), ("alli", "al"), ("entli", "ent"),
    ("eli", "e"), ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"),
    ("ator", "ate"), ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
    ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble"),
]

_STEP3_SUFFIXES = [
    ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
    ("ical", "ic"), ("ful", ""), ("ness", ""),
]

_STEP4_SUFFIXES = [
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement",
    "ment", "ent", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
]


@lru_cache(maxsize=None)
def stem(word: str) -> str:
    """Porter-stem a single lowercase word."""
    w = word.lower()
    if len(w) <= 2:
        return w

    # Step 1a
    if w.endswith("sses"):
        w = w[:-2]
    elif w.endswith("ies"):
        w = w[:-2]
    elif w.endswith("ss"):
        pass
    elif w.endswith("s"):
        w = w[:-1]

    # Step 1b
    if w.endswith("eed"):
        if _measure(w[:-3]) > 0:
            w = w[:-1]
    else:
        flag = False
        if w.endswith("ed") and _contains_vowel(w[:-2]):
            w, flag = w[:-2], True
        elif w.endswith("ing") and _contains_vowel(w[:-3]):
            w, flag = w[:-3], True
        if flag:
            if w.endswith(("at", "bl", "iz")):
                w += "e"
            elif _ends_double_consonant(w) and not w.endswith(("l", "s", "z")):
                w = w[:-1]
            elif _measure(w) == 1 and _ends_cvc(w):
                w += "e"

    # Step 1c
    if w.endswith("y") and _contains_vowel(w[:-1]):
        w = w[:-1] + "i"

    # Step 2
    for suffix, repl in _STEP2_SUFFIXES:
        if w.endswith(suffix):
            base = w[: -len(suffix)]
            if _measure(base) > 0:
                w = base + repl
            break

    # Step 3
    for suffix, repl in _STEP3_SUFFIXES:
        if w.endswith(suffix):
            base = w[: -len(suffix)]
            if _measure(base) > 0:
                w = base + repl
            break

    # Step 4 ("ion" carries the extra s/t condition and is handled separately)
    for suffix in _STEP4_SUFFIXES:
        if w.endswith(suffix):
            base = w[: -len(suffix)]
            if _measure(base) > 1:
                w = base
            break
    else:
        if w.endswith("ion") and len(w) > 4 and w[-4] in "st" and _measure(w[:-3]) > 1:
            w = w[:-3]

    # Step 5a
    if w.endswith("e"):
        base = w[:-1]
        m = _measure(base)
        if m > 1 or (m == 1 and not _ends_cvc(base)):
            w = base

    # Step 5b
    if _measure(w) > 1 and _ends_double_consonant(w) and w.endswith("l"):
        w = w[:-1]

    return w


def stem_tokens(tokens: tuple[str, ...] | list[str]) -> list[str]:
    return [stem(t) for t in tokens]
