"""Relationship-consistency estimation and neighbor match propagation.

Consistency (eps1, eps2) of a relationship pair measures how often a
neighbor of one matched entity has a matching counterpart among the other
entity's neighbors, and vice versa.  It is fit by maximum likelihood over
the seed matches with a per-seed integer latent (the number of matching
neighbor pairs), alternating a closed-form eps update with exact integer
optimization of the latents.

Given consistency, the posterior that a candidate neighbor pair matches,
conditional on the anchor pair matching, is computed by enumerating
neighbor match sets, scoring each by prior odds times the consistency
likelihood of how many neighbors found counterparts, and marginalizing.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

EPS_MIN = 0.01
EPS_MAX = 0.99

_FORCE_HI = 1.0 - 1e-12
_FORCE_LO = 1e-12


# ---------------------------------------------------------------------------
# consistency MLE


@dataclass
class ConsistencyEstimate:
    e1: float
    e2: float
    log_likelihood: float
    latents: list
    trace: list = field(default_factory=list)  # per-iteration log-likelihoods


def _log_choose(n: int, k: int) -> float:
    return (math.lgamma(n + 1) - math.lgamma(k + 1)
            - math.lgamma(n - k + 1))


def _log_likelihood(sizes, e1, e2, latents) -> float:
    ll = 0.0
    for (n1, n2), L in zip(sizes, latents):
        ll += _log_choose(n1, L) + L * math.log(e1) \
            + (n1 - L) * math.log(1.0 - e1)
        ll += _log_choose(n2, L) + L * math.log(e2) \
            + (n2 - L) * math.log(1.0 - e2)
    return ll


def _best_latents(sizes, e1, e2, latent_min=None):
    """Exact per-seed argmax over the integer latent, given eps."""
    lz = (math.log(e1) - math.log(1.0 - e1)
          + math.log(e2) - math.log(1.0 - e2))
    out = []
    for j, (n1, n2) in enumerate(sizes):
        hi = min(n1, n2)
        lo = min(latent_min[j], hi) if latent_min is not None else 0
        best_l, best_v = lo, None
        for L in range(lo, hi + 1):
            v = _log_choose(n1, L) + _log_choose(n2, L) + L * lz
            if best_v is None or v > best_v + 1e-15:
                best_l, best_v = L, v
        out.append(best_l)
    return out


def _eps_step(sizes, latents, eps_min, eps_max):
    tot_l = sum(latents)
    tot1 = sum(n1 for n1, _ in sizes)
    tot2 = sum(n2 for _, n2 in sizes)
    e1 = tot_l / tot1 if tot1 else eps_min
    e2 = tot_l / tot2 if tot2 else eps_min
    clamp = lambda e: min(max(e, eps_min), eps_max)
    return clamp(e1), clamp(e2)


def mle_consistency(sizes, fixed_latents=None, eps_min=EPS_MIN,
                    eps_max=EPS_MAX, latent_min=None) -> ConsistencyEstimate:
    """Maximize the joint likelihood over (eps1, eps2) within the clamp
    box and integer latents L_j in [0, min(n1_j, n2_j)].

    Alternates (a) the closed-form binomial eps update and (b) exact
    integer latent optimization, iterated to a fixed point from several
    deterministic starts plus a coarse-grid seed.  Ties between fixed
    points break toward higher likelihood, then larger eps1+eps2.
    With fixed_latents given, only step (a) runs (single closed form).

    latent_min gives per-seed lower bounds for the latents.  The latent
    is by definition the number of true matches between the two neighbor
    sets, so matches already established among the neighbors bound it
    from below.  Without such grounding the likelihood is near-symmetric
    in (eps, L) vs (1-eps, n-L), and one unbalanced seed can tip the
    optimum into the degenerate low-eps mode that explains every
    neighbor as noise; the bound removes that mode when evidence exists.
    """
    if latent_min is None:
        keep = [s for s in sizes if s[0] + s[1] > 0]
        mins = None
    else:
        pairs = [(s, m) for s, m in zip(sizes, latent_min)
                 if s[0] + s[1] > 0]
        keep = [s for s, _ in pairs]
        mins = [m for _, m in pairs]
    sizes = keep
    if not sizes:
        return ConsistencyEstimate(eps_min, eps_min, 0.0, [])

    if fixed_latents is not None:
        e1, e2 = _eps_step(sizes, fixed_latents, eps_min, eps_max)
        ll = _log_likelihood(sizes, e1, e2, fixed_latents)
        return ConsistencyEstimate(e1, e2, ll, list(fixed_latents), [ll])

    starts = [(0.2, 0.2), (0.5, 0.5), (0.8, 0.8), (0.3, 0.7), (0.7, 0.3)]
    # coarse grid seed: best corner of a cheap sweep joins the starts
    grid = [eps_min + i * (eps_max - eps_min) / 13 for i in range(14)]
    best_g, best_gll = None, None
    for ge1 in grid:
        for ge2 in grid:
            lat = _best_latents(sizes, ge1, ge2, mins)
            ll = _log_likelihood(sizes, ge1, ge2, lat)
            if best_gll is None or ll > best_gll:
                best_g, best_gll = (ge1, ge2), ll
    starts.append(best_g)

    best = None
    for e1, e2 in starts:
        trace = []
        latents = _best_latents(sizes, e1, e2, mins)
        for _ in range(200):
            e1n, e2n = _eps_step(sizes, latents, eps_min, eps_max)
            latn = _best_latents(sizes, e1n, e2n, mins)
            trace.append(_log_likelihood(sizes, e1n, e2n, latn))
            if (e1n, e2n) == (e1, e2) and latn == latents:
                break
            e1, e2, latents = e1n, e2n, latn
        ll = _log_likelihood(sizes, e1, e2, latents)
        key = (ll, e1 + e2)
        if best is None or key > (best.log_likelihood,
                                  best.e1 + best.e2):
            best = ConsistencyEstimate(e1, e2, ll, latents, trace)
    return best


def estimate_consistency(r1, r2, seeds, kb1, kb2, eps_min=EPS_MIN,
                         eps_max=EPS_MAX, known_matches=None):
    """Consistency of relationship pair (r1, r2) from seed matches.

    Neighbor sets follow directed triples (out-direction).  Requires at
    least one seed with neighbors on both sides; otherwise the minimal
    consistency is returned.

    When `known_matches` (a set of entity pairs) is given, matches found
    between a seed's two neighbor sets become lower bounds on that
    seed's latent overlap, anchoring the estimate to the evidence
    instead of leaving the latents free (see mle_consistency).
    """
    sizes = []
    mins = [] if known_matches is not None else None
    usable = False
    for u1, u2 in seeds:
        nb1 = kb1.neighbors(u1, r1)
        nb2 = kb2.neighbors(u2, r2)
        n1, n2 = len(nb1), len(nb2)
        if n1 == 0 and n2 == 0:
            continue
        if n1 > 0 and n2 > 0:
            usable = True
        sizes.append((n1, n2))
        if mins is not None:
            c1 = sum(1 for t1 in nb1
                     if any((t1, t2) in known_matches for t2 in nb2))
            c2 = sum(1 for t2 in nb2
                     if any((t1, t2) in known_matches for t1 in nb1))
            mins.append(min(c1, c2))
    if not usable:
        return eps_min, eps_min
    est = mle_consistency(sizes, eps_min=eps_min, eps_max=eps_max,
                          latent_min=mins)
    return est.e1, est.e2


# ---------------------------------------------------------------------------
# neighbor posteriors


@dataclass
class NeighborProblem:
    """One anchor vertex's neighbor group under a single edge label.

    cand entries are (key, left, right, prior): key identifies the
    candidate pair, left/right are the underlying neighbor entities
    (needed to count distinct matched neighbors), prior is the current
    match probability.  n1/n2 are the full neighbor-set sizes, of which
    the candidates cover a subset.
    """
    anchor: object
    label: tuple
    cand: list
    n1: int
    n2: int


def _split_forced(cand, one_to_one):
    """Partition candidates into forced matches (prior ~1), forced
    non-matches (prior ~0) and free pairs."""
    forced_in, forced_out, free = [], [], []
    for entry in cand:
        prior = entry[3]
        if prior >= _FORCE_HI:
            forced_in.append(entry)
        elif prior <= _FORCE_LO:
            forced_out.append(entry)
        else:
            free.append(entry)
    if one_to_one:
        lefts, rights, ok = set(), set(), []
        for entry in sorted(forced_in, key=lambda e: str(e[0])):
            if entry[1] in lefts or entry[2] in rights:
                warnings.warn("conflicting forced matches in neighbor "
                              "group; demoting %r to free" % (entry[0],))
                free.append((entry[0], entry[1], entry[2], 1.0 - 1e-9))
                continue
            lefts.add(entry[1])
            rights.add(entry[2])
            ok.append(entry)
        forced_in = ok
    return forced_in, forced_out, free


def _iter_subsets(free, forced_in, one_to_one):
    """Yield (members, log_f_free) over admissible free subsets; members
    excludes forced pairs.  log_f_free sums log prior / log(1-prior) of
    free pairs only."""
    n = len(free)
    base_lefts = {e[1] for e in forced_in}
    base_rights = {e[2] for e in forced_in}
    for mask in range(1 << n):
        members = []
        log_f = 0.0
        lefts = set(base_lefts)
        rights = set(base_rights)
        ok = True
        for i in range(n):
            key, left, right, prior = free[i]
            if mask >> i & 1:
                if one_to_one and (left in lefts or right in rights):
                    ok = False
                    break
                lefts.add(left)
                rights.add(right)
                members.append(free[i])
                log_f += math.log(prior)
            else:
                log_f += math.log(1.0 - prior)
        if ok:
            yield members, log_f


def _g_term(p, n, e):
    """log of e^p (1-e)^(n-p) with 0*log(0) treated as 0 at e in {0,1}."""
    if e <= 0.0:
        return 0.0 if p == 0 else float("-inf")
    if e >= 1.0:
        return 0.0 if p == n else float("-inf")
    return p * math.log(e) + (n - p) * math.log(1.0 - e)


def _group_score_log(members, forced_in, n1, n2, e1, e2):
    """log of g(.|N1) x g(.|N2) for the match set members+forced_in:
    matched neighbors counted as distinct projected entities."""
    m = list(members) + list(forced_in)
    p1 = len({e[1] for e in m})
    p2 = len({e[2] for e in m})
    return _g_term(p1, n1, e1) + _g_term(p2, n2, e2)


def _logsumexp(xs):
    if not xs:
        return float("-inf")
    m = max(xs)
    if m == float("-inf"):
        return m
    return m + math.log(sum(math.exp(x - m) for x in xs))


def match_set_score(prob: NeighborProblem, members, e1, e2) -> float:
    """Unnormalized probability-space score of one specific match set
    (given by candidate keys): prior factor times both consistency
    likelihoods.  Exposed for direct inspection and tests."""
    member_keys = set(members)
    by_key = {e[0]: e for e in prob.cand}
    chosen = [by_key[k] for k in member_keys]
    log_f = 0.0
    for entry in prob.cand:
        p = entry[3]
        log_f += math.log(max(p if entry[0] in member_keys else 1.0 - p,
                              _FORCE_LO))
    g = _group_score_log(chosen, [], prob.n1, prob.n2, e1, e2)
    return math.exp(log_f + g)


def neighbor_posteriors(prob: NeighborProblem, e1, e2, one_to_one=True,
                        k_enum=12) -> dict:
    """Marginal match posteriors for every candidate in the group,
    conditional on the anchor matching.

    Enumerates admissible match sets (injective ones by default; any
    subset when one_to_one=False), scores each in log space, and
    normalizes.  Pairs with prior ~1 / ~0 are treated as fixed and
    receive marginal 1 / 0.  With more than k_enum free candidates only
    the top k_enum by prior are enumerated; the rest are fixed
    non-matches with marginal 0.
    """
    if not (0.0 <= e1 <= 1.0 and 0.0 <= e2 <= 1.0):
        raise ValueError("consistency parameters must lie in [0,1]")
    forced_in, forced_out, free = _split_forced(prob.cand, one_to_one)

    free.sort(key=lambda e: (-e[3], str(e[0])))
    dropped = free[k_enum:]
    free = free[:k_enum]

    scores = []        # (members_keys, logscore)
    totals = []
    per_key = {e[0]: [] for e in free}
    for members, log_f in _iter_subsets(free, forced_in, one_to_one):
        g = _group_score_log(members, forced_in, prob.n1, prob.n2, e1, e2)
        ls = log_f + g
        totals.append(ls)
        for e in members:
            per_key[e[0]].append(ls)

    log_z = _logsumexp(totals)
    out = {}
    for e in forced_in:
        out[e[0]] = 1.0
    for e in forced_out:
        out[e[0]] = 0.0
    for e in dropped:
        out[e[0]] = 0.0
    for key, ls in per_key.items():
        if log_z == float("-inf"):
            out[key] = 0.0
        else:
            out[key] = math.exp(_logsumexp(ls) - log_z)
    return out


def path_lower_bound(edge_probs) -> float:
    """Product of edge probabilities along a path; empty path -> 1."""
    p = 1.0
    for x in edge_probs:
        p *= x
    return p
