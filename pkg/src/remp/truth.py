"""Label fusion and resolution.

Worker votes on a candidate pair are fused with the pair's prior through
a Bayes product over independent workers: each match vote from a worker
of quality lam multiplies the non-match odds by (1-lam)/lam, each
non-match vote by lam/(1-lam).  Posteriors at or above t_hi confirm a
match, at or below t_lo a non-match; anything between is a hard question
whose stored prior is overwritten with the posterior so it competes less
in later selection rounds.

Isolated pairs (no relationship edges) are classified from their
attribute-similarity vectors with a per-query random forest trained on
nearby pairs, where "nearby" means sharing almost all nonzero similarity
slots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.ensemble import RandomForestClassifier

from .textsim import jaccard

ANSWER_MATCH = "match"
ANSWER_NON_MATCH = "non_match"
ANSWER_UNSURE = "unsure"

STATE_UNRESOLVED = "unresolved"
STATE_MATCH = "match"
STATE_NON_MATCH = "non_match"
STATE_HARD = "hard"

# Priors are pulled into this box before fusing any votes so that a
# hard 0/1 prior cannot silence the evidence entirely; with no votes the
# prior passes through untouched.
PRIOR_MIN = 0.01
PRIOR_MAX = 0.99


@dataclass(frozen=True)
class LabelRecord:
    question: tuple         # candidate pair (entity id in KB1, in KB2)
    worker: str
    answer: str             # match / non_match / unsure
    timestamp: float = 0.0


@dataclass(frozen=True)
class Resolution:
    pair: tuple
    state: str              # match / non_match / hard
    posterior: float


def posterior(prior: float, w_t, w_f, qualities) -> float:
    """Posterior match probability given match votes w_t and non-match
    votes w_f (worker ids looked up in qualities).  Computed in log-odds
    space so long vote streaks cannot overflow."""
    w_t, w_f = list(w_t), list(w_f)
    for w in w_t + w_f:
        lam = qualities[w]
        if not 0.0 < lam < 1.0:
            raise ValueError(f"worker quality must be in (0,1), got {lam}")
    if not w_t and not w_f:
        return prior
    p = min(max(prior, PRIOR_MIN), PRIOR_MAX)
    log_odds = math.log(p) - math.log1p(-p)
    for w in w_t:
        lam = qualities[w]
        log_odds += math.log(lam) - math.log1p(-lam)
    for w in w_f:
        lam = qualities[w]
        log_odds += math.log1p(-lam) - math.log(lam)
    if log_odds >= 0:
        return 1.0 / (1.0 + math.exp(-log_odds))
    e = math.exp(log_odds)
    return e / (1.0 + e)


def resolve_labels(records, priors, qualities,
                   t_hi: float = 0.8, t_lo: float = 0.2):
    """Fuse one batch of label records into per-question resolutions.

    Returns a Resolution per distinct question, sorted by pair.  Unsure
    answers are kept out of both vote sets.
    """
    votes = {}
    for rec in records:
        w_t, w_f = votes.setdefault(rec.question, ([], []))
        if rec.answer == ANSWER_MATCH:
            w_t.append(rec.worker)
        elif rec.answer == ANSWER_NON_MATCH:
            w_f.append(rec.worker)
        elif rec.answer != ANSWER_UNSURE:
            raise ValueError(f"unknown answer {rec.answer!r}")
    out = []
    for pair in sorted(votes):
        w_t, w_f = votes[pair]
        post = posterior(priors[pair], w_t, w_f, qualities)
        if post >= t_hi:
            state = STATE_MATCH
        elif post <= t_lo:
            state = STATE_NON_MATCH
        else:
            state = STATE_HARD
        out.append(Resolution(pair=pair, state=state, posterior=post))
    return out


@dataclass
class ResolutionState:
    """Mutable pair bookkeeping shared with the engine loop."""
    priors: dict = field(default_factory=dict)   # pair -> current prior
    unresolved: set = field(default_factory=set)
    matches: set = field(default_factory=set)
    non_matches: set = field(default_factory=set)
    new_seeds: list = field(default_factory=list)  # confirmed matches, in order


def apply_resolutions(resolutions, state: ResolutionState) -> None:
    """Fold a batch of resolutions into the pair state: confirmed pairs
    leave the unresolved set with prior pinned to 1/0 (matches join the
    seed pool for the next consistency re-estimation); hard questions
    stay unresolved with their prior replaced by the posterior."""
    for res in sorted(resolutions, key=lambda r: r.pair):
        if res.state == STATE_MATCH:
            state.priors[res.pair] = 1.0
            state.unresolved.discard(res.pair)
            if res.pair not in state.matches:
                state.matches.add(res.pair)
                state.new_seeds.append(res.pair)
        elif res.state == STATE_NON_MATCH:
            state.priors[res.pair] = 0.0
            state.unresolved.discard(res.pair)
            state.non_matches.add(res.pair)
        elif res.state == STATE_HARD:
            state.priors[res.pair] = res.posterior
        else:
            raise ValueError(f"unexpected resolution state {res.state!r}")


class IsolatedPairClassifier:
    """Per-query random-forest classifier for pairs without relationship
    evidence.

    For a query pair p, the neighborhood N_p holds every retained pair
    whose set of nonzero similarity slots overlaps p's at Jaccard >= psi
    (the query itself excluded).  Confirmed matches in N_p are the
    positive examples; unresolved pairs in N_p are treated as negatives,
    as are confirmed non-matches.  An empty neighborhood predicts
    non-match.
    """

    def __init__(self, vectors, matches, unresolved, non_matches=(),
                 psi: float = 0.9, n_trees: int = 100, seed: int = 0):
        self.vectors = vectors          # pair -> similarity vector
        self.matches = set(matches)
        self.unresolved = set(unresolved)
        self.non_matches = set(non_matches)
        self.psi = psi
        self.n_trees = n_trees
        self.seed = seed
        self._support = {
            p: frozenset(int(i) for i in np.nonzero(np.asarray(v))[0])
            for p, v in vectors.items()
        }

    def neighborhood(self, pair) -> list:
        mine = self._support.get(pair, frozenset())
        out = []
        for other in self.vectors:
            if other == pair:
                continue
            if jaccard(mine, self._support[other]) >= self.psi:
                out.append(other)
        return sorted(out)

    def predict_proba(self, pair) -> float:
        """Estimated probability that ``pair`` is a match."""
        hood = self.neighborhood(pair)
        rows, labels = [], []
        for other in hood:
            if other in self.matches:
                rows.append(self.vectors[other])
                labels.append(1)
            elif other in self.unresolved or other in self.non_matches:
                rows.append(self.vectors[other])
                labels.append(0)
        if not rows:
            return 0.0
        if all(labels):
            return 1.0
        if not any(labels):
            return 0.0
        forest = RandomForestClassifier(n_estimators=self.n_trees,
                                        random_state=self.seed)
        forest.fit(np.asarray(rows), np.asarray(labels))
        proba = forest.predict_proba(np.asarray([self.vectors[pair]]))[0]
        return float(proba[list(forest.classes_).index(1)])

    def predict(self, pair) -> str:
        return STATE_MATCH if self.predict_proba(pair) > 0.5 else STATE_NON_MATCH
