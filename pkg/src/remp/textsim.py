"""Label normalization and literal similarity primitives.

Normalization lowercases, splits on non-alphanumeric runs, and stems each
token with a small fixed suffix-stripping stemmer.  The stemmer is a
deliberately minimal rule cascade (plural endings, -ed/-ing, double-final
consonant, y->i, final e); its output on a word list is pinned by a golden
test so any rule change is caught.
"""

from __future__ import annotations

import re

from .kb import KIND_STRING, TypedLiteral

_TOKEN_SPLIT = re.compile(r"[\W_]+", re.UNICODE)
_VOWELS = "aeiou"


def stem(token: str) -> str:
    """Suffix-stripping stemmer over lowercase tokens.

    Rule cascade (each stage applies at most once):
      1. -sses -> -ss ; -ies -> -i ; -s dropped (len>3, not -ss/-us)
      2. -ing / -ed dropped when the stem keeps a vowel (len>4 / len>3)
      3. doubled final consonant undoubled (l, s, z kept doubled)
      4. final y -> i after a consonant
      5. final e dropped (len>3)
    """
    t = token
    if len(t) > 4 and t.endswith("sses"):
        t = t[:-2]
    elif len(t) > 3 and t.endswith("ies"):
        t = t[:-2]
    elif len(t) > 3 and t.endswith("s") and t[-2] not in "su":
        t = t[:-1]
    if len(t) > 4 and t.endswith("ing"):
        base = t[:-3]
        if any(c in _VOWELS for c in base):
            t = base
    elif len(t) > 3 and t.endswith("ed"):
        base = t[:-2]
        if any(c in _VOWELS for c in base):
            t = base
    if len(t) > 3 and t[-1] == t[-2] and t[-1].isalpha() \
            and t[-1] not in "aeiouslz":
        t = t[:-1]
    if len(t) > 2 and t[-1] == "y" and t[-2] not in _VOWELS:
        t = t[:-1] + "i"
    if len(t) > 3 and t[-1] == "e":
        t = t[:-1]
    return t


def normalize_label(s: str) -> frozenset:
    """Lowercased, tokenized, stemmed token set; empty string -> empty set."""
    return frozenset(stem(t) for t in _TOKEN_SPLIT.split(s.lower()) if t)


def jaccard(x, y) -> float:
    """|x ∩ y| / |x ∪ y|; both empty -> 0 (absent evidence is not a match)."""
    if not x and not y:
        return 0.0
    x, y = set(x), set(y)
    return len(x & y) / len(x | y)


def literal_sim(l1: TypedLiteral, l2: TypedLiteral) -> float:
    """Similarity of two typed literals in [0, 1].

    Strings compare by token-set Jaccard; numbers and dates by one minus
    the percentage difference (dates as days since epoch), clamped to
    [0, 1].  Mismatched kinds score 0.
    """
    if l1.kind != l2.kind:
        return 0.0
    if l1.kind == KIND_STRING:
        return jaccard(normalize_label(l1.raw), normalize_label(l2.raw))
    v1, v2 = l1.num, l2.num
    if v1 == v2:
        return 1.0
    m = max(abs(v1), abs(v2))
    return max(0.0, min(1.0, 1.0 - abs(v1 - v2) / m))


def extended_jaccard(v1, v2, theta: float) -> float:
    """Jaccard over two literal sets where two literals count as equal
    when literal_sim >= theta; equal literals are paired greedily by
    descending similarity, each used at most once.  Score is
    matched / (|V1| + |V2| - matched); both sets empty -> 0.
    """
    if not v1 or not v2:
        return 0.0
    a = sorted(v1, key=lambda l: (l.kind, l.raw))
    b = sorted(v2, key=lambda l: (l.kind, l.raw))
    scored = []
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            s = literal_sim(x, y)
            if s >= theta:
                scored.append((-s, i, j))
    scored.sort()
    used_a, used_b = set(), set()
    matched = 0
    for _, i, j in scored:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        matched += 1
    return matched / (len(a) + len(b) - matched)
