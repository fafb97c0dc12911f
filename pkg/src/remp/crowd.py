"""Worker pool: simulated workers with fixed error rates, qualification
parsing for human workers, and round-robin question assignment."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

log = logging.getLogger(__name__)

KIND_SIMULATED = "simulated"
KIND_HUMAN = "human"

# Quality is clamped into (0,1) at registration so that vote fusion never
# divides by zero; a zero-error simulated worker still answers perfectly,
# the clamp only softens its evidential weight.
QUALITY_MIN = 0.01
QUALITY_MAX = 0.99
DEFAULT_HUMAN_QUALITY = 0.9

ASSIGN_PENDING = "pending"
ASSIGN_ANSWERED = "answered"


@dataclass(frozen=True)
class Worker:
    id: str
    kind: str
    quality: float                 # lambda used by vote fusion
    error_rate: float | None = None  # simulated workers only


@dataclass
class Assignment:
    question: tuple
    worker: str
    state: str = ASSIGN_PENDING


def _clamp_quality(q: float) -> float:
    return min(max(q, QUALITY_MIN), QUALITY_MAX)


def make_simulated_worker(worker_id: str, error_rate: float) -> Worker:
    if not 0.0 <= error_rate <= 1.0:
        raise ValueError(f"error rate must be in [0,1], got {error_rate}")
    return Worker(id=worker_id, kind=KIND_SIMULATED,
                  quality=_clamp_quality(1.0 - error_rate),
                  error_rate=error_rate)


def simulated_pool(n: int, error_rate: float, prefix: str = "sim") -> list:
    return [make_simulated_worker(f"{prefix}{i:02d}", error_rate)
            for i in range(n)]


def load_worker_pool(path) -> list:
    """Parse a pool file with lines `worker_id<TAB>kind<TAB>value`, where
    value is the error rate for simulated workers and the qualification
    quality for human ones (defaulting to 0.9 when omitted)."""
    pool = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) < 2:
                raise ValueError(f"{path}:{lineno}: expected at least "
                                 f"worker_id<TAB>kind")
            wid, kind = cols[0], cols[1]
            if kind == KIND_SIMULATED:
                if len(cols) < 3:
                    raise ValueError(f"{path}:{lineno}: simulated worker "
                                     f"needs an error rate")
                pool.append(make_simulated_worker(wid, float(cols[2])))
            elif kind == KIND_HUMAN:
                q = float(cols[2]) if len(cols) > 2 and cols[2] else \
                    DEFAULT_HUMAN_QUALITY
                if not 0.0 < q < 1.0:
                    raise ValueError(f"{path}:{lineno}: human quality must "
                                     f"be in (0,1), got {q}")
                pool.append(Worker(id=wid, kind=KIND_HUMAN,
                                   quality=_clamp_quality(q)))
            else:
                raise ValueError(f"{path}:{lineno}: unknown kind {kind!r}")
    return pool


def simulate_answer(worker: Worker, question, gold_matches, rng) -> str:
    """Ground truth flipped with the worker's error rate.  Questions
    absent from the gold standard count as non-matches."""
    if worker.kind != KIND_SIMULATED:
        raise ValueError(f"worker {worker.id} is not simulated")
    if question in gold_matches:
        truth, flipped = "match", "non_match"
    else:
        log.debug("question %s not in gold standard; treating as non-match",
                  question)
        truth, flipped = "non_match", "match"
    return flipped if rng.random() < worker.error_rate else truth


class RoundRobinAssigner:
    """Deals questions to workers in pool order, continuing where the
    previous batch left off so load stays balanced across batches."""

    def __init__(self, pool):
        self.pool = list(pool)
        self.cursor = 0

    def assign_one(self, question, n: int, exclude=frozenset()):
        """n distinct eligible workers for one question, or None when the
        pool cannot supply them (caller decides what that means)."""
        chosen = []
        taken = set()
        scanned = 0
        size = len(self.pool)
        while len(chosen) < n and scanned < size:
            worker = self.pool[self.cursor % size]
            self.cursor = (self.cursor + 1) % size
            scanned += 1
            if worker.id in exclude or worker.id in taken:
                continue
            taken.add(worker.id)
            chosen.append(Assignment(question=question, worker=worker.id))
        if len(chosen) < n:
            # roll the cursor back so a failed probe does not skew load
            self.cursor = (self.cursor - scanned) % size if size else 0
            return None
        return chosen

    def assign(self, questions, n: int, exclude=None) -> list:
        """Assignments for a whole batch; per-question exclusions come
        from `exclude` (question -> set of worker ids).  Raises when the
        pool is smaller than n."""
        if n > len(self.pool):
            raise ValueError(f"pool of {len(self.pool)} cannot give {n} "
                             f"distinct workers per question")
        out = []
        for q in questions:
            excl = exclude.get(q, frozenset()) if exclude else frozenset()
            got = self.assign_one(q, n, excl)
            if got is not None:
                out.extend(got)
        return out
