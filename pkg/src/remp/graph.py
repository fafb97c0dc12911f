"""The ER graph over retained candidate pairs and its probabilistic form.

Vertices are retained entity pairs (dense integer vertex ids); a directed
edge with label (r1, r2) runs from pair p to pair p' exactly when the
first entities are linked by r1 in KB1 and the second by r2 in KB2.  The
probabilistic variant weights each edge with the conditional posterior
that the destination pair matches given that the source pair does, and
carries -log probabilities as lengths for the shortest-path machinery;
parallel edges between two vertices collapse to the most probable one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .propagation import EPS_MIN, NeighborProblem, neighbor_posteriors

_PRIOR_DEAD = 1e-12  # anchors at/below this prior propagate nothing


class ErGraph:
    def __init__(self):
        self.pairs: list = []          # vid -> (u1, u2)
        self.vid: dict = {}            # (u1, u2) -> vid
        # vid -> {(r1, r2): (n1, n2, tuple of successor vids)}
        self.groups: list = []
        self._indegree: list = []

    def add_vertex(self, pair) -> int:
        v = self.vid.get(pair)
        if v is None:
            v = len(self.pairs)
            self.vid[pair] = v
            self.pairs.append(pair)
            self.groups.append({})
            self._indegree.append(0)
        return v

    def n_vertices(self) -> int:
        return len(self.pairs)

    def vertices(self):
        return range(len(self.pairs))

    def edges(self):
        for src in self.vertices():
            for (r1, r2), (_, _, dsts) in sorted(self.groups[src].items()):
                for dst in dsts:
                    yield src, dst, r1, r2

    def neighbor_groups(self, v: int) -> dict:
        """Outgoing edges of v grouped by label: (r1,r2) -> successor set."""
        return {label: set(dsts)
                for label, (_, _, dsts) in self.groups[v].items()}

    def group_sizes(self, v: int, label) -> tuple:
        n1, n2, _ = self.groups[v][label]
        return n1, n2

    def labels(self) -> set:
        out = set()
        for g in self.groups:
            out.update(g.keys())
        return out

    def isolated_vertices(self) -> list:
        return [v for v in self.vertices()
                if not self.groups[v] and self._indegree[v] == 0]


def build_er_graph(m_rd, kb1, kb2) -> ErGraph:
    """Vertices = retained pairs; one edge per relationship pair whose
    triples connect both sides.  Isolated vertices are kept."""
    g = ErGraph()
    for pair in sorted(m_rd):
        g.add_vertex(pair)
    left_index: dict = {}
    for v, (u1, _) in enumerate(g.pairs):
        left_index.setdefault(u1, []).append(v)

    for v, (u1, u2) in enumerate(g.pairs):
        out = {}
        for r1 in kb1.out_rels(u1):
            n1set = kb1.neighbors(u1, r1)
            for r2 in kb2.out_rels(u2):
                n2set = kb2.neighbors(u2, r2)
                dsts = []
                for t1 in n1set:
                    for w in left_index.get(t1, ()):
                        if g.pairs[w][1] in n2set and w != v:
                            dsts.append(w)
                if dsts:
                    dsts = tuple(sorted(set(dsts)))
                    out[(r1, r2)] = (len(n1set), len(n2set), dsts)
                    for w in dsts:
                        g._indegree[w] += 1
        g.groups[v] = out
    return g


@dataclass
class ProbErGraph:
    base: ErGraph
    # per labeled edge, before collapsing: (src, dst, r1, r2) -> prob
    edge_prob: dict = field(default_factory=dict)
    # collapsed: src vid -> {dst vid: prob} taking the max over labels
    prob: list = field(default_factory=list)
    # src vid -> {dst vid: -log prob}
    length: list = field(default_factory=list)

    def n_vertices(self):
        return self.base.n_vertices()


def to_probabilistic(g: ErGraph, consistency: dict, priors: dict,
                     one_to_one=True, k_enum=12) -> ProbErGraph:
    """Weight every edge with the neighbor-posterior of its destination
    given its source.  Anchors with prior ~0 (confirmed non-matches)
    propagate nothing; zero-probability edges are dropped."""
    pg = ProbErGraph(base=g)
    pg.prob = [dict() for _ in g.vertices()]
    pg.length = [dict() for _ in g.vertices()]
    for src in g.vertices():
        if priors.get(g.pairs[src], 0.0) <= _PRIOR_DEAD:
            continue
        for label, (n1, n2, dsts) in sorted(g.groups[src].items()):
            e1, e2 = consistency.get(label, (EPS_MIN, EPS_MIN))
            cand = [(w, g.pairs[w][0], g.pairs[w][1],
                     priors.get(g.pairs[w], 0.0)) for w in dsts]
            problem = NeighborProblem(anchor=src, label=label, cand=cand,
                                      n1=n1, n2=n2)
            marg = neighbor_posteriors(problem, e1, e2,
                                       one_to_one=one_to_one, k_enum=k_enum)
            for w in dsts:
                p = marg[w]
                if p <= 0.0:
                    continue
                pg.edge_prob[(src, w) + label] = p
                if p > pg.prob[src].get(w, 0.0):
                    pg.prob[src][w] = p
                    pg.length[src][w] = -math.log(p) if p < 1.0 else 0.0
    return pg
