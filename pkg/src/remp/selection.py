"""Question selection: inferred-match sets and greedy benefit maximization.

A labeled match propagates along probabilistic-graph edges; a pair is in
inferred(q) when the shortest path from q keeps the product of edge
probabilities at or above the precision threshold tau, i.e. path length
(sum of -log probabilities) at most zeta = -log tau.  The expected number
of pairs resolved by asking a question set is monotone and submodular, so
a lazy greedy scan with a priority queue carries the usual (1 - 1/e)
guarantee.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field


@dataclass
class InferredSets:
    """Bounded shortest-path distances among candidate questions:
    forward[q][p] = dist(q, p) <= zeta; backward is the transpose."""
    forward: dict = field(default_factory=dict)
    backward: dict = field(default_factory=dict)
    zeta: float = 0.0

    def inferred(self, q) -> set:
        return set(self.forward.get(q, ()))


def compute_inferred_sets(pg, cand, zeta: float) -> InferredSets:
    """All-pairs shortest paths within the candidate set, kept only up
    to length zeta.

    Dynamic program over intermediates (Floyd-Warshall order) on the
    subgraph induced by cand; dropping entries beyond zeta is lossless
    for the kept ones because edge lengths are non-negative, so every
    prefix of a within-bound path is itself within bound.  Each source
    reaches itself at distance 0.
    """
    if zeta < 0:
        raise ValueError("zeta must be >= 0")
    members = sorted(cand)
    inside = set(members)
    fwd = {q: {q: 0.0} for q in members}
    for q in members:
        for w, l in pg.length[q].items():
            if w in inside and w != q and l <= zeta:
                if l < fwd[q].get(w, float("inf")):
                    fwd[q][w] = l
    for mid in members:
        row = fwd[mid]
        for src in members:
            d1 = fwd[src].get(mid)
            if d1 is None or src == mid:
                continue
            for dst, d2 in row.items():
                nd = d1 + d2
                if nd <= zeta and nd < fwd[src].get(dst, float("inf")):
                    fwd[src][dst] = nd
    bwd = {q: {} for q in members}
    for src, row in fwd.items():
        for dst, d in row.items():
            bwd[dst][src] = d
    return InferredSets(forward=fwd, backward=bwd, zeta=zeta)


@dataclass
class SelectionProblem:
    cand: list                      # unresolved candidate question ids
    priors: dict                    # id -> Pr[match]
    mu: int = 10


def benefit(questions, inf: InferredSets, priors, universe=None) -> float:
    """Expected number of pairs resolved by asking `questions`: each pair
    p counts 1 minus the probability that every asked question covering
    it turns out a non-match."""
    fail = {}
    for q in questions:
        pq = priors[q]
        for p in inf.forward.get(q, ()):
            if universe is not None and p not in universe:
                continue
            fail[p] = fail.get(p, 1.0) * (1.0 - pq)
    return sum(1.0 - f for f in fail.values())


def select_questions(prob: SelectionProblem, inf: InferredSets) -> list:
    """Lazy greedy batch selection, at most mu questions.

    Marginal gains are kept in a max-heap keyed (gain, then smaller id);
    stale entries are recomputed on pop and either accepted (when the
    recomputation is current) or pushed back.  Matches plain greedy with
    the same tie-breaking exactly; stops early when no positive gain
    remains.
    """
    if not prob.cand:
        return []
    fail = {}       # pair -> product of (1 - prior) over chosen coverers
    chosen = []

    def gain(q):
        pq = prob.priors[q]
        g = 0.0
        for p in inf.forward.get(q, ()):
            g += fail.get(p, 1.0) * pq
        return g

    heap = []
    for q in sorted(prob.cand):
        heap.append((-gain(q), q, 0))
    heapq.heapify(heap)

    while heap and len(chosen) < prob.mu:
        neg, q, stamp = heapq.heappop(heap)
        if stamp != len(chosen):
            heapq.heappush(heap, (-gain(q), q, len(chosen)))
            continue
        if -neg <= 1e-12:
            break
        chosen.append(q)
        pq = prob.priors[q]
        for p in inf.forward.get(q, ()):
            fail[p] = fail.get(p, 1.0) * (1.0 - pq)
    return chosen
