"""End-to-end entity-resolution engine.

Wires the full pipeline together: load two knowledge bases, block
candidate pairs by label tokens, align attributes, prune dominated
candidates, build the relationship graph, then iterate the labeling
loop — estimate relationship consistency from the current seed matches,
weight edges with neighbor posteriors, propagate confirmed matches
along high-probability paths, pick the most beneficial questions,
collect worker labels (simulated or via an attached service), and fuse
them into match / non-match decisions.  Isolated pairs that the graph
can never reach are classified from their similarity vectors at the
end.  Results carry a provenance tag so consumers can filter by how
each match was established.
"""

from __future__ import annotations

import heapq
import logging
import math
import random
import threading
import time
from collections import Counter
from dataclasses import asdict, dataclass
from pathlib import Path

from .candidates import (generate_candidates, match_attributes_1to1, prune,
                         similarity_vectors)
from .crowd import (KIND_SIMULATED, RoundRobinAssigner, load_worker_pool,
                    simulate_answer, simulated_pool)
from .graph import build_er_graph, to_probabilistic
from .kb import escape_field, load_kb, unescape_field
from .propagation import estimate_consistency
from .selection import SelectionProblem, compute_inferred_sets, select_questions
from .truth import (STATE_HARD, STATE_MATCH, STATE_NON_MATCH,
                    IsolatedPairClassifier, LabelRecord, ResolutionState,
                    apply_resolutions, resolve_labels)

log = logging.getLogger(__name__)

PROV_SEED = "seed"              # exact-label pair, matched before any labeling
PROV_LABELED = "labeled"        # confirmed by workers
PROV_INFERRED = "inferred"      # propagated from a confirmed match at >= tau
PROV_CLASSIFIER = "classifier"  # isolated pair accepted by the classifier


# ---------------------------------------------------------------------------
# configuration


@dataclass
class EngineConfig:
    kb1_attrs: str
    kb1_rels: str
    kb2_attrs: str
    kb2_rels: str
    gold: str | None = None
    label_attr1: str = "label"
    label_attr2: str = "label"
    k: int = 4                       # dominance-pruning rank cutoff
    tau: float = 0.9                 # minimum path probability to infer a match
    mu: int = 10                     # questions per loop
    t_label: float = 0.3             # label-token Jaccard blocking threshold
    theta: float = 0.9               # literal similarity threshold
    s_min: float = 0.1               # minimum attribute alignment score
    psi: float = 0.9                 # isolated-pair neighborhood threshold
    t_hi: float = 0.8                # posterior above which a pair is a match
    t_lo: float = 0.2                # posterior below which a pair is a non-match
    assignments_per_question: int = 5
    k_enum: int = 12                 # exact-enumeration cap per neighbor group
    one_to_one: bool = True
    budget: int | None = None        # total question cap, None = unlimited
    error_rate: float = 0.0          # simulated worker error rate
    workers_file: str | None = None
    pool_size: int = 15              # simulated pool size when no workers file
    seed: int = 0
    out: str | None = None           # final matches TSV
    label_log: str | None = None     # append-only label audit TSV

    def validate(self) -> None:
        for name in ("kb1_attrs", "kb1_rels", "kb2_attrs", "kb2_rels"):
            path = getattr(self, name)
            if not path or not Path(path).is_file():
                raise ValueError(f"{name}: file not found: {path!r}")
        for name in ("gold", "workers_file"):
            path = getattr(self, name)
            if path is not None and not Path(path).is_file():
                raise ValueError(f"{name}: file not found: {path!r}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must be in (0, 1], got {self.tau}")
        if self.mu < 1:
            raise ValueError(f"mu must be >= 1, got {self.mu}")
        for name in ("t_label", "theta", "psi"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {v}")
        if not 0.0 <= self.t_lo < self.t_hi <= 1.0:
            raise ValueError(f"need 0 <= t_lo < t_hi <= 1, got "
                             f"t_lo={self.t_lo}, t_hi={self.t_hi}")
        if self.assignments_per_question < 1:
            raise ValueError("assignments_per_question must be >= 1")
        if self.k_enum < 1:
            raise ValueError(f"k_enum must be >= 1, got {self.k_enum}")
        if self.budget is not None and self.budget < 0:
            raise ValueError(f"budget must be >= 0, got {self.budget}")
        if not 0.0 <= self.error_rate <= 1.0:
            raise ValueError(f"error_rate must be in [0, 1], got "
                             f"{self.error_rate}")
        if self.pool_size < 1:
            raise ValueError(f"pool_size must be >= 1, got {self.pool_size}")


# ---------------------------------------------------------------------------
# metrics


def evaluate(predicted, gold) -> tuple[float, float, float]:
    """Precision, recall, F1 of a predicted pair set against gold.

    An empty prediction has precision 0 by convention.
    """
    pred, g = set(predicted), set(gold)
    tp = len(pred & g)
    p = tp / len(pred) if pred else 0.0
    r = tp / len(g) if g else 0.0
    f1 = 2.0 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f1


def pair_completeness(pairs, gold) -> float:
    """Fraction of gold matches present in `pairs`."""
    g = set(gold)
    return len(set(pairs) & g) / len(g) if g else 0.0


@dataclass
class MetricsReport:
    n_entities_kb1: int = 0
    n_entities_kb2: int = 0
    n_candidates: int = 0
    n_seeds: int = 0
    n_retained: int = 0
    reduction_ratio: float = 0.0
    questions_asked: int = 0
    loops: int = 0
    n_matches: int = 0
    n_seed_matches: int = 0
    n_labeled: int = 0
    n_inferred: int = 0
    n_classifier: int = 0
    precision: float | None = None
    recall: float | None = None
    f1: float | None = None
    pc_candidates: float | None = None
    pc_retained: float | None = None
    runtime_s: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class LoopStats:
    loop: int
    questions: int
    inferred: int
    matches: int
    non_matches: int
    hard: int
    frozen: int


# ---------------------------------------------------------------------------
# label sources


class SimulatedLabelSource:
    """Answers question batches with simulated workers.

    The contract shared with service-backed sources: `collect(questions,
    exclude)` returns `(records, unanswerable)` where `exclude` maps a
    question to worker ids that must not see it again, and questions that
    cannot get a full panel of fresh workers come back in `unanswerable`
    instead of producing records.  `qualities` maps worker id to the
    accuracy fed into posterior fusion.
    """

    def __init__(self, workers, gold_matches, n_assignments: int, rng):
        workers = list(workers)
        bad = [w.id for w in workers if w.kind != KIND_SIMULATED]
        if bad:
            raise ValueError(f"simulated labeling needs simulated workers; "
                             f"got {bad[:3]}")
        if not workers:
            raise ValueError("empty worker pool")
        self.workers = workers
        self.by_id = {w.id: w for w in workers}
        self.assigner = RoundRobinAssigner(workers)
        self.gold = set(gold_matches)
        self.n = n_assignments
        self.rng = rng

    @property
    def qualities(self) -> dict:
        return {w.id: w.quality for w in self.workers}

    def collect(self, questions, exclude) -> tuple[list, set]:
        records = []
        failed = set()
        for q in questions:
            panel = self.assigner.assign_one(q, self.n,
                                             exclude.get(q, frozenset()))
            if panel is None:
                failed.add(q)
                continue
            for a in panel:
                worker = self.by_id[a.worker]
                answer = simulate_answer(worker, q, self.gold, self.rng)
                records.append(LabelRecord(question=q, worker=worker.id,
                                           answer=answer))
        return records, failed


# ---------------------------------------------------------------------------
# result containers


@dataclass
class EngineResult:
    matches: list               # (pair, provenance, probability), sorted
    metrics: MetricsReport
    engine: "Engine"

    @property
    def match_pairs(self) -> set:
        return {m[0] for m in self.matches}


def write_matches(path, rows, kb1, kb2) -> None:
    """Final matches as TSV: name1, name2, provenance, probability."""
    with open(path, "w", encoding="utf-8") as fh:
        for (u1, u2), prov, prob in rows:
            fh.write("\t".join((escape_field(kb1.ents.name(u1)),
                                escape_field(kb2.ents.name(u2)),
                                prov, f"{prob:.6f}")) + "\n")


def load_gold(path, kb1, kb2) -> set:
    """Gold matches as id pairs; entity names must exist in the KBs."""
    pairs = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) < 2:
                raise ValueError(f"{path}:{lineno}: expected 2 columns")
            n1, n2 = unescape_field(fields[0]), unescape_field(fields[1])
            u1, u2 = kb1.ents.get(n1), kb2.ents.get(n2)
            if u1 is None or u2 is None:
                raise ValueError(f"{path}:{lineno}: unknown entity "
                                 f"{n1 if u1 is None else n2!r}")
            pairs.add((u1, u2))
    return pairs


# ---------------------------------------------------------------------------
# engine


class Engine:
    """Runs the whole resolution pipeline for one configuration."""

    def __init__(self, config: EngineConfig, label_source=None):
        config.validate()
        self.cfg = config
        self.rng = random.Random(config.seed)
        self.label_source = label_source
        self.zeta = -math.log(config.tau)
        # guards mutable loop state against concurrent snapshot reads
        # (the HTTP service polls while the loop runs); reentrant so the
        # loop's own nested calls stay cheap in the simulated path
        self.mutex = threading.RLock()

        self.kb1 = None
        self.kb2 = None
        self.gold = None
        self.state: ResolutionState | None = None
        self.graph = None
        self.consistency = {}

        # loop bookkeeping (safe to read before run() for live snapshots)
        self.current_loop = 0
        self.loops = 0
        self.questions_asked = 0
        self.frozen: set = set()
        self.asked_workers: dict = {}
        self.inferred: dict = {}            # pair -> path probability
        self.labeled_posterior: dict = {}   # pair -> posterior at confirmation
        self.classifier_matches: dict = {}  # pair -> vote fraction
        self.loop_stats: list = []

    # -- setup --------------------------------------------------------

    def load(self) -> None:
        cfg = self.cfg
        self.kb1 = load_kb(cfg.kb1_attrs, cfg.kb1_rels, name="kb1")
        self.kb2 = load_kb(cfg.kb2_attrs, cfg.kb2_rels, name="kb2")
        self.label1 = self.kb1.atts.get(cfg.label_attr1)
        self.label2 = self.kb2.atts.get(cfg.label_attr2)
        if self.label1 is None:
            raise ValueError(f"label attribute {cfg.label_attr1!r} absent "
                             f"from KB1")
        if self.label2 is None:
            raise ValueError(f"label attribute {cfg.label_attr2!r} absent "
                             f"from KB2")
        if cfg.gold:
            self.gold = load_gold(cfg.gold, self.kb1, self.kb2)

    def prepare(self) -> None:
        """Everything up to the first labeling loop."""
        cfg = self.cfg
        ms = generate_candidates(self.kb1, self.kb2, self.label1, self.label2,
                                 t_label=cfg.t_label)
        self.m_c = dict(ms.candidates)
        self.m_in = set(ms.initial)
        self.m_at = match_attributes_1to1(self.kb1, self.kb2, self.m_in,
                                          theta=cfg.theta, s_min=cfg.s_min)
        self.vecs = similarity_vectors(sorted(self.m_c), self.m_at,
                                       self.kb1, self.kb2, theta=cfg.theta)
        self.m_rd = prune(set(self.m_c), self.vecs, cfg.k)
        self.vecs_rd = {p: self.vecs[p] for p in self.m_rd}
        self.graph = build_er_graph(self.m_rd, self.kb1, self.kb2)

        priors = {}
        for p in sorted(self.m_rd):
            priors[p] = 1.0 if p in self.m_in else self.m_c[p]
        self.state = ResolutionState(
            priors=priors,
            unresolved={p for p in self.m_rd if p not in self.m_in},
            matches=set(self.m_in))
        log.info("prepared: %d candidates, %d seeds, %d retained, "
                 "%d graph edges", len(self.m_c), len(self.m_in),
                 len(self.m_rd), sum(1 for _ in self.graph.edges()))

    def _make_simulated_source(self) -> SimulatedLabelSource:
        cfg = self.cfg
        if cfg.workers_file:
            workers = load_worker_pool(cfg.workers_file)
        else:
            workers = simulated_pool(cfg.pool_size, cfg.error_rate)
        return SimulatedLabelSource(workers, self.gold,
                                    cfg.assignments_per_question, self.rng)

    # -- labeling loop --------------------------------------------------

    def _probabilistic_graph(self):
        seeds = sorted(self.state.matches)
        consistency = {}
        for label in sorted(self.graph.labels()):
            r1, r2 = label
            consistency[label] = estimate_consistency(
                r1, r2, seeds, self.kb1, self.kb2,
                known_matches=self.state.matches)
        self.consistency = consistency
        return to_probabilistic(self.graph, consistency, self.state.priors,
                                one_to_one=self.cfg.one_to_one,
                                k_enum=self.cfg.k_enum)

    def _sweep(self, pg) -> list:
        """Propagate confirmed matches: any unresolved pair within total
        path length zeta of one becomes an inferred match with
        probability exp(-distance)."""
        dist = {}
        heap = []
        for pair in self.state.matches:
            v = self.graph.vid.get(pair)
            if v is not None:
                dist[v] = 0.0
                heap.append((0.0, v))
        heapq.heapify(heap)
        while heap:
            d, v = heapq.heappop(heap)
            if d > dist.get(v, math.inf):
                continue
            for w, length in pg.length[v].items():
                nd = d + length
                if nd <= self.zeta and nd < dist.get(w, math.inf):
                    dist[w] = nd
                    heapq.heappush(heap, (nd, w))
        newly = []
        for v in sorted(dist):
            pair = self.graph.pairs[v]
            if pair in self.state.unresolved:
                prob = math.exp(-dist[v])
                self.state.unresolved.discard(pair)
                self.state.priors[pair] = prob
                self.inferred[pair] = prob
                newly.append(pair)
        return newly

    def _select(self, pg, candidates, room: int) -> list:
        vids = [self.graph.vid[p] for p in candidates]
        inf = compute_inferred_sets(pg, vids, self.zeta)
        priors = {v: self.state.priors[self.graph.pairs[v]] for v in vids}
        problem = SelectionProblem(cand=vids, priors=priors, mu=room)
        return [self.graph.pairs[v] for v in select_questions(problem, inf)]

    def _log_labels(self, records) -> None:
        if not self.cfg.label_log:
            return
        with open(self.cfg.label_log, "a", encoding="utf-8") as fh:
            for r in records:
                u1, u2 = r.question
                fh.write("\t".join((escape_field(self.kb1.ents.name(u1)),
                                    escape_field(self.kb2.ents.name(u2)),
                                    escape_field(r.worker),
                                    r.answer)) + "\n")

    def _run_loop(self) -> None:
        cfg, state = self.cfg, self.state
        while True:
            with self.mutex:
                self.current_loop += 1
                pg = self._probabilistic_graph()
                newly = self._sweep(pg)
                if newly:
                    log.info("loop %d: inferred %d matches",
                             self.current_loop, len(newly))
                candidates = sorted(p for p in state.unresolved
                                    if p not in self.frozen)
                if not candidates:
                    break
                if (cfg.budget is not None
                        and self.questions_asked >= cfg.budget):
                    break
                room = (cfg.mu if cfg.budget is None
                        else min(cfg.mu, cfg.budget - self.questions_asked))
                chosen = self._select(pg, candidates, room)
                if not chosen:
                    break
            # blocks on the label source without holding the mutex so
            # snapshot endpoints stay responsive during human batches
            records, failed = self.label_source.collect(chosen,
                                                        self.asked_workers)
            with self.mutex:
                self.frozen |= failed
                if failed:
                    log.info("loop %d: froze %d questions (no fresh "
                             "workers)", self.current_loop, len(failed))
                if not records:
                    continue
                asked = {r.question for r in records}
                self.questions_asked += len(asked)
                self.loops += 1
                for r in records:
                    self.asked_workers.setdefault(r.question,
                                                  set()).add(r.worker)
                self._log_labels(records)
                resolutions = resolve_labels(records, state.priors,
                                             self.label_source.qualities,
                                             t_hi=cfg.t_hi, t_lo=cfg.t_lo)
                counts = Counter(res.state for res in resolutions)
                for res in resolutions:
                    if res.state == STATE_MATCH:
                        self.labeled_posterior[res.pair] = res.posterior
                apply_resolutions(resolutions, state)
                self.loop_stats.append(LoopStats(
                    loop=self.current_loop, questions=len(asked),
                    inferred=len(newly), matches=counts[STATE_MATCH],
                    non_matches=counts[STATE_NON_MATCH],
                    hard=counts[STATE_HARD], frozen=len(self.frozen)))

    # -- isolated pairs -------------------------------------------------

    def _classify_isolated(self) -> None:
        isolated = {self.graph.pairs[v]
                    for v in self.graph.isolated_vertices()}
        queries = sorted(p for p in isolated if p in self.state.unresolved)
        if not queries:
            return
        clf = IsolatedPairClassifier(self.vecs_rd, self.state.matches,
                                     self.state.unresolved,
                                     non_matches=self.state.non_matches,
                                     psi=self.cfg.psi, seed=self.cfg.seed)
        for p in queries:
            proba = clf.predict_proba(p)
            if proba > 0.5:
                self.classifier_matches[p] = proba
        log.info("classifier accepted %d of %d isolated pairs",
                 len(self.classifier_matches), len(queries))

    # -- output ---------------------------------------------------------

    def _assemble_matches(self) -> list:
        rows = [(p, PROV_SEED, 1.0) for p in self.m_in]
        rows += [(p, PROV_LABELED, self.labeled_posterior.get(p, 1.0))
                 for p in self.state.matches - self.m_in]
        rows += [(p, PROV_INFERRED, prob) for p, prob in self.inferred.items()]
        rows += [(p, PROV_CLASSIFIER, prob)
                 for p, prob in self.classifier_matches.items()]
        rows.sort(key=lambda r: r[0])
        return rows

    def _metrics(self, rows, runtime: float) -> MetricsReport:
        pred = {r[0] for r in rows}
        by_prov = Counter(r[1] for r in rows)
        m = MetricsReport(
            n_entities_kb1=self.kb1.n_entities(),
            n_entities_kb2=self.kb2.n_entities(),
            n_candidates=len(self.m_c),
            n_seeds=len(self.m_in),
            n_retained=len(self.m_rd),
            reduction_ratio=(1.0 - len(self.m_rd) / len(self.m_c)
                             if self.m_c else 0.0),
            questions_asked=self.questions_asked,
            loops=self.loops,
            n_matches=len(pred),
            n_seed_matches=by_prov[PROV_SEED],
            n_labeled=by_prov[PROV_LABELED],
            n_inferred=by_prov[PROV_INFERRED],
            n_classifier=by_prov[PROV_CLASSIFIER],
            runtime_s=runtime)
        if self.gold is not None:
            m.precision, m.recall, m.f1 = evaluate(pred, self.gold)
            m.pc_candidates = pair_completeness(self.m_c, self.gold)
            m.pc_retained = pair_completeness(self.m_rd, self.gold)
        return m

    # -- live snapshots (used by the HTTP service) ----------------------

    def session_info(self) -> dict:
        with self.mutex:
            if self.state is None:
                return {"loop": 0, "asked": 0, "resolved": 0, "remaining": 0,
                        "budget": self.cfg.budget}
            total = sum(1 for p in self.m_rd if p not in self.m_in)
            remaining = len(self.state.unresolved - self.frozen)
            return {"loop": self.current_loop,
                    "asked": self.questions_asked,
                    "resolved": total - len(self.state.unresolved),
                    "remaining": remaining,
                    "budget": self.cfg.budget}

    def progress_snapshot(self) -> dict:
        with self.mutex:
            if self.state is None:
                return MetricsReport().as_dict()
            return self._metrics(self._assemble_matches(), 0.0).as_dict()

    def question_payload(self, pair) -> dict:
        """Side-by-side rendering data for one question."""
        u1, u2 = pair
        attrs = []
        for am in self.m_at:
            v1 = sorted(lit.raw for lit in self.kb1.attr_values(u1, am.a1))
            v2 = sorted(lit.raw for lit in self.kb2.attr_values(u2, am.a2))
            if v1 or v2:
                attrs.append({"attr1": self.kb1.atts.name(am.a1),
                              "attr2": self.kb2.atts.name(am.a2),
                              "values1": v1, "values2": v2})
        return {"u1": self.kb1.ents.name(u1),
                "u2": self.kb2.ents.name(u2),
                "attributes": attrs,
                "neighborhood": {
                    "side1": self._neighbor_lines(self.kb1, u1, self.label1),
                    "side2": self._neighbor_lines(self.kb2, u2, self.label2),
                }}

    def _neighbor_lines(self, kb, u, label_attr, limit: int = 5) -> list:
        out = []
        for r in sorted(kb.out_rels(u)):
            rname = kb.rels.name(r)
            for t in sorted(kb.neighbors(u, r)):
                names = kb.labels(t, label_attr)
                out.append(f"{rname}: {names[0] if names else kb.ents.name(t)}")
                if len(out) >= limit:
                    return out
        return out

    # -- entry point ------------------------------------------------------

    def run(self) -> EngineResult:
        t0 = time.perf_counter()
        self.load()
        self.prepare()
        if self.label_source is None:
            if self.gold is None:
                raise ValueError("no label source: provide a gold standard "
                                 "for simulated labeling or attach a label "
                                 "service")
            self.label_source = self._make_simulated_source()
        self._run_loop()
        with self.mutex:
            self._classify_isolated()
            rows = self._assemble_matches()
            metrics = self._metrics(rows, time.perf_counter() - t0)
        if self.cfg.out:
            write_matches(self.cfg.out, rows, self.kb1, self.kb2)
        log.info("done: %d matches, %d questions, %d loops, %.2fs",
                 metrics.n_matches, metrics.questions_asked, metrics.loops,
                 metrics.runtime_s)
        return EngineResult(matches=rows, metrics=metrics, engine=self)


def run_pipeline(config: EngineConfig, label_source=None) -> EngineResult:
    return Engine(config, label_source=label_source).run()
