"""HTTP labeling service: JSON API for workers plus static UI assets.

Endpoints (JSON, UTF-8):
  GET  /api/session                      loop/asked/resolved/remaining/budget
  GET  /api/questions?worker_id=W        open questions this worker may answer
  POST /api/labels                       {worker_id, question_id, answer}
  GET  /api/progress                     live metrics snapshot
Any other GET serves files from the configured static directory.

The engine runs in the calling thread and blocks inside
`ServiceLabelSource.collect` until every question of the current batch
has a full panel of answers; HTTP handlers feed answers in from the
server's worker threads.  One (question, worker) pair can be answered at
most once — duplicates get 409 regardless of timing.
"""

from __future__ import annotations

import json
import logging
import mimetypes
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .crowd import KIND_HUMAN, load_worker_pool
from .engine import Engine, EngineConfig
from .truth import ANSWER_MATCH, ANSWER_NON_MATCH, ANSWER_UNSURE, LabelRecord

log = logging.getLogger(__name__)

VALID_ANSWERS = (ANSWER_MATCH, ANSWER_NON_MATCH, ANSWER_UNSURE)
DEFAULT_QUALITY = 0.9   # assumed accuracy for workers without a file entry


class _OpenQuestion:
    __slots__ = ("qid", "pair", "needed", "excluded", "answers")

    def __init__(self, qid, pair, needed: int, excluded: set):
        self.qid = qid
        self.pair = pair
        self.needed = needed
        self.excluded = excluded
        self.answers = {}           # worker id -> (arrival seq, answer)

    def full(self) -> bool:
        return len(self.answers) >= self.needed


class ServiceLabelSource:
    """Engine-side label source backed by the HTTP API.

    collect() publishes the batch as open questions and blocks until each
    has `n_assignments` answers from distinct, non-excluded workers.
    Records are returned in answer-arrival order, which makes the label
    log reproduce a scripted session exactly.
    """

    def __init__(self, n_assignments: int, qualities: dict | None = None,
                 default_quality: float = DEFAULT_QUALITY):
        self.n = n_assignments
        self.default_quality = default_quality
        self.known_qualities = dict(qualities or {})
        self.cond = threading.Condition()
        self.open: dict = {}        # qid -> _OpenQuestion
        self.seen_workers: set = set()
        self._seq = 0
        self._counter = 0

    def _worker_universe(self) -> set:
        return set(self.known_qualities) | self.seen_workers

    @property
    def qualities(self) -> dict:
        with self.cond:
            out = {w: self.default_quality for w in self.seen_workers}
        out.update(self.known_qualities)
        return out

    # -- engine side ----------------------------------------------------

    def collect(self, questions, exclude) -> tuple[list, set]:
        with self.cond:
            batch, failed = [], set()
            universe = self._worker_universe()
            for pair in questions:
                excluded = set(exclude.get(pair, frozenset()))
                # every worker this service has ever known is excluded:
                # report the question unanswerable instead of stalling
                # the whole batch on a labeler who may never appear
                if universe and universe <= excluded:
                    failed.add(pair)
                    continue
                self._counter += 1
                qid = f"q{self._counter:05d}"
                oq = _OpenQuestion(qid, pair, self.n, excluded)
                self.open[qid] = oq
                batch.append(oq)
            log.info("published %d questions, waiting for answers",
                     len(batch))
            self.cond.wait_for(lambda: all(oq.full() for oq in batch))
            stamped = [(seq, LabelRecord(question=oq.pair, worker=w,
                                         answer=ans))
                       for oq in batch
                       for w, (seq, ans) in oq.answers.items()]
            self.open.clear()
        stamped.sort(key=lambda t: t[0])
        return [rec for _, rec in stamped], failed

    # -- handler side ---------------------------------------------------

    def eligible(self, worker: str) -> list:
        """Open (question_id, pair) items this worker may still answer."""
        with self.cond:
            return [(oq.qid, oq.pair)
                    for qid, oq in sorted(self.open.items())
                    if not oq.full()
                    and worker not in oq.answers
                    and worker not in oq.excluded]

    def submit(self, worker: str, qid: str, answer: str) -> tuple[int, dict]:
        """Record one answer; returns (http status, response payload)."""
        if answer not in VALID_ANSWERS:
            return 400, {"error": f"answer must be one of "
                                  f"{'|'.join(VALID_ANSWERS)}"}
        with self.cond:
            oq = self.open.get(qid)
            if oq is None:
                return 404, {"error": "unknown or closed question"}
            if worker in oq.answers or worker in oq.excluded:
                return 409, {"error": "duplicate answer for this question"}
            if oq.full():
                return 409, {"error": "question already has a full panel"}
            self._seq += 1
            oq.answers[worker] = (self._seq, answer)
            self.seen_workers.add(worker)
            if oq.full():
                self.cond.notify_all()
            return 200, {"accepted": True,
                         "question_id": qid,
                         "answers_missing": oq.needed - len(oq.answers),
                         "open_questions": sum(1 for o in self.open.values()
                                               if not o.full())}


# ---------------------------------------------------------------------------
# HTTP plumbing


class LabelApiHandler(BaseHTTPRequestHandler):
    # set by make_server(): engine, source, static_dir
    engine: Engine = None
    source: ServiceLabelSource = None
    static_dir: Path | None = None
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):   # route access noise to logging
        log.debug("%s %s", self.address_string(), fmt % args)

    def _send_json(self, status: int, payload) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        url = urlparse(self.path)
        if url.path == "/api/session":
            self._send_json(200, self.engine.session_info())
        elif url.path == "/api/progress":
            self._send_json(200, self.engine.progress_snapshot())
        elif url.path == "/api/questions":
            params = parse_qs(url.query)
            worker = (params.get("worker_id") or [""])[0]
            if not worker:
                self._send_json(400, {"error": "worker_id required"})
                return
            items = self.source.eligible(worker)
            payload = [{"question_id": qid,
                        **self.engine.question_payload(pair)}
                       for qid, pair in items]
            self._send_json(200, payload)
        elif url.path.startswith("/api/"):
            self._send_json(404, {"error": "unknown endpoint"})
        else:
            self._serve_static(url.path)

    def do_POST(self):
        url = urlparse(self.path)
        if url.path != "/api/labels":
            self._send_json(404, {"error": "unknown endpoint"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = json.loads(self.rfile.read(length) or b"{}")
            worker = str(body["worker_id"])
            qid = str(body["question_id"])
            answer = str(body["answer"])
        except (ValueError, KeyError, json.JSONDecodeError):
            self._send_json(400, {"error": "body must be JSON with "
                                           "worker_id, question_id, answer"})
            return
        status, payload = self.source.submit(worker, qid, answer)
        self._send_json(status, payload)

    def _serve_static(self, path: str) -> None:
        if self.static_dir is None:
            self._send_json(404, {"error": "no static assets configured"})
            return
        rel = path.lstrip("/") or "index.html"
        target = (self.static_dir / rel).resolve()
        root = self.static_dir.resolve()
        if root not in target.parents and target != root:
            self._send_json(404, {"error": "not found"})
            return
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            self._send_json(404, {"error": "not found"})
            return
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        data = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


def human_qualities(workers_file) -> dict:
    """Worker accuracy map from a pool file (human entries only)."""
    if not workers_file:
        return {}
    return {w.id: w.quality for w in load_worker_pool(workers_file)
            if w.kind == KIND_HUMAN}


def make_server(engine: Engine, source: ServiceLabelSource, port: int,
                static_dir=None) -> ThreadingHTTPServer:
    handler = type("BoundLabelApiHandler", (LabelApiHandler,), {
        "engine": engine,
        "source": source,
        "static_dir": Path(static_dir) if static_dir else None,
    })
    server = ThreadingHTTPServer(("127.0.0.1", port), handler)
    server.daemon_threads = True
    return server


def default_static_dir() -> Path | None:
    """Bundled frontend build if present (repo layout), else None."""
    root = Path(__file__).resolve().parent.parent.parent
    dist = root / "frontend" / "dist"
    return dist if dist.is_dir() else None


def serve_pipeline(config: EngineConfig, port: int,
                   static_dir=None) -> int:
    """Run the engine against live HTTP labelers; blocks until done.

    The server keeps answering progress/session polls after the run
    completes so the UI can show the final state; stop with Ctrl-C.
    """
    source = ServiceLabelSource(config.assignments_per_question,
                                qualities=human_qualities(config.workers_file))
    engine = Engine(config, label_source=source)
    static = static_dir or default_static_dir()
    server = make_server(engine, source, port, static_dir=static)
    host, bound_port = server.server_address
    print(f"serving on http://{host}:{bound_port}/", flush=True)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        result = engine.run()
        print(json.dumps(result.metrics.as_dict(), indent=2, sort_keys=True),
              flush=True)
        log.info("run complete; still serving progress endpoints")
        threading.Event().wait()    # park until interrupted
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
    return 0


__all__ = ["ServiceLabelSource", "LabelApiHandler", "make_server",
           "serve_pipeline", "human_qualities", "default_static_dir"]
