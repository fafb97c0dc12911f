"""Candidate generation, attribute matching, similarity vectors, pruning.

Candidates are entity pairs whose normalized label token sets reach a
Jaccard threshold; the similarity doubles as the pair's prior match
probability.  Exact-normalized-label pairs form the initial (seed) match
set.  Attributes of the two KBs are aligned 1:1 by average value
similarity over the seeds, giving each pair a fixed-length similarity
vector; pairs that are strictly dominated by at least k competitors
sharing either entity are pruned.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .textsim import extended_jaccard, jaccard, normalize_label

Pair = tuple  # (u1, u2) integer entity ids


@dataclass
class MatchSets:
    """Candidate pairs with priors, the exact-label seed subset, and the
    post-pruning retained subset (filled in by prune)."""
    candidates: dict = field(default_factory=dict)   # Pair -> prior
    initial: set = field(default_factory=set)
    retained: set = field(default_factory=set)
    unlabeled_kb1: int = 0
    unlabeled_kb2: int = 0


@dataclass(frozen=True)
class AttributeMatch:
    a1: int
    a2: int
    score: float


def label_token_sets(kb, label_attr):
    """entity id -> union of normalized token sets over its label values."""
    out = {}
    for u in kb.ents:
        toks = frozenset()
        for lit in kb.attr_values(u, label_attr):
            toks |= normalize_label(lit.raw)
        if toks:
            out[u] = toks
    return out


def generate_candidates(kb1, kb2, label_attr1, label_attr2,
                        t_label: float = 0.3) -> MatchSets:
    """All pairs with label-token Jaccard >= t_label, found through a
    token inverted index so the |U1| x |U2| product is never scanned."""
    toks1 = label_token_sets(kb1, label_attr1)
    toks2 = label_token_sets(kb2, label_attr2)
    ms = MatchSets()
    ms.unlabeled_kb1 = kb1.n_entities() - len(toks1)
    ms.unlabeled_kb2 = kb2.n_entities() - len(toks2)

    index = {}
    for u2, ts in toks2.items():
        for t in ts:
            index.setdefault(t, []).append(u2)

    norm1 = {}  # exact-label lookup: per-literal token set -> kb1 entities
    for u1 in toks1:
        for lit in kb1.attr_values(u1, label_attr1):
            ts = normalize_label(lit.raw)
            if ts:
                norm1.setdefault(ts, set()).add(u1)

    for u1 in sorted(toks1):
        ts1 = toks1[u1]
        seen = set()
        for t in ts1:
            seen.update(index.get(t, ()))
        for u2 in sorted(seen):
            sim = jaccard(ts1, toks2[u2])
            if sim >= t_label:
                ms.candidates[(u1, u2)] = sim

    for u2 in toks2:
        for lit in kb2.attr_values(u2, label_attr2):
            ts = normalize_label(lit.raw)
            for u1 in norm1.get(ts, ()):
                # some label value normalizes identically on both sides
                if (u1, u2) in ms.candidates:
                    ms.initial.add((u1, u2))
    return ms


def attribute_similarity(a1, a2, m_in, kb1, kb2, theta: float = 0.9) -> float:
    """Average extended-Jaccard similarity of the two attributes' value
    sets over the seed matches; pairs with no values on either side are
    excluded from the denominator."""
    total = 0.0
    denom = 0
    for (u1, u2) in m_in:
        v1 = kb1.attr_values(u1, a1)
        v2 = kb2.attr_values(u2, a2)
        if not v1 and not v2:
            continue
        denom += 1
        total += extended_jaccard(v1, v2, theta)
    return total / denom if denom else 0.0


def match_attributes_1to1(kb1, kb2, m_in, theta: float = 0.9,
                          s_min: float = 0.1) -> list:
    """Maximum-total-score 1:1 attribute assignment (Hungarian over the
    full score matrix); matches scoring below s_min are discarded after
    the assignment.  Result sorted by (a1, a2) id, which fixes the
    similarity-vector slot order."""
    n1, n2 = len(kb1.atts), len(kb2.atts)
    if not m_in or n1 == 0 or n2 == 0:
        return []
    scores = np.zeros((n1, n2))
    for a1 in range(n1):
        for a2 in range(n2):
            scores[a1, a2] = attribute_similarity(a1, a2, m_in, kb1, kb2,
                                                  theta)
    rows, cols = linear_sum_assignment(scores, maximize=True)
    out = [AttributeMatch(int(a1), int(a2), float(scores[a1, a2]))
           for a1, a2 in zip(rows, cols) if scores[a1, a2] >= s_min]
    out.sort(key=lambda m: (m.a1, m.a2))
    return out


def build_similarity_vector(pair, m_at, kb1, kb2,
                            theta: float = 0.9) -> np.ndarray:
    """One slot per attribute match, in (a1, a2) order: extended Jaccard
    of the pair's value sets under that attribute match."""
    u1, u2 = pair
    return np.array([extended_jaccard(kb1.attr_values(u1, m.a1),
                                      kb2.attr_values(u2, m.a2), theta)
                     for m in m_at])


def similarity_vectors(pairs, m_at, kb1, kb2, theta: float = 0.9) -> dict:
    return {p: build_similarity_vector(p, m_at, kb1, kb2, theta)
            for p in pairs}


def dominates(s1: np.ndarray, s2: np.ndarray) -> bool:
    if len(s1) != len(s2):
        raise ValueError("similarity vector length mismatch")
    return bool(np.all(s1 >= s2))


def strictly_dominates(s1: np.ndarray, s2: np.ndarray) -> bool:
    if len(s1) != len(s2):
        raise ValueError("similarity vector length mismatch")
    return bool(np.all(s1 >= s2) and np.any(s1 > s2))


def min_rank(p, pairs, vecs) -> int:
    """Worst per-side rank: max over sides of the number of competing
    pairs sharing that side's entity whose vectors strictly dominate
    p's."""
    sp = vecs[p]
    ranks = []
    for side in (0, 1):
        n = sum(1 for q in pairs
                if q != p and q[side] == p[side]
                and strictly_dominates(vecs[q], sp))
        ranks.append(n)
    return max(ranks)


def _prune_one_way(pairs, vecs, k, side):
    blocks = {}
    for p in pairs:
        blocks.setdefault(p[side], []).append(p)
    kept = set()
    for block in blocks.values():
        if len(block) <= k:          # nothing to prune in small blocks
            kept.update(block)
            continue
        vs = np.stack([vecs[p] for p in block])
        ge = np.all(vs[:, None, :] >= vs[None, :, :], axis=-1)
        gt = ge & np.any(vs[:, None, :] > vs[None, :, :], axis=-1)
        ranks = gt.sum(axis=0)       # ranks[j] = # strict dominators of j
        kept.update(p for p, r in zip(block, ranks) if r < k)
    return kept


def prune(m_c, vecs, k: int) -> set:
    """Partial-order pruning: drop pairs ranked k-th or worse among
    competitors sharing one entity, one pass per side (the second pass
    runs on the survivors of the first)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    kept = _prune_one_way(m_c, vecs, k, side=0)
    return _prune_one_way(kept, vecs, k, side=1)
