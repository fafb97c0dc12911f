import json
import threading
import time
import urllib.error
import urllib.request

import pytest

from remp.engine import Engine
from remp.kb import escape_field
from remp.service import (ServiceLabelSource, _OpenQuestion, human_qualities,
                          make_server)
from remp.truth import ANSWER_MATCH, ANSWER_NON_MATCH

from conftest import toy_config


def get_json(url: str):
    try:
        with urllib.request.urlopen(url, timeout=10) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read())


def post_json(url: str, obj):
    req = urllib.request.Request(
        url, data=json.dumps(obj).encode("utf-8"),
        headers={"Content-Type": "application/json"}, method="POST")
    try:
        with urllib.request.urlopen(req, timeout=10) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read())


def start_collect(src: ServiceLabelSource, questions, exclude=None):
    """Run collect() in a thread; returns (thread, result-dict)."""
    out = {}

    def run():
        out["records"], out["failed"] = src.collect(questions, exclude or {})

    t = threading.Thread(target=run, daemon=True)
    t.start()
    deadline = time.time() + 5.0
    while time.time() < deadline:
        with src.cond:
            if len(src.open) >= len(questions) or out:
                break
        time.sleep(0.005)
    return t, out


class TestServiceLabelSource:
    def test_collect_blocks_until_full_panels(self):
        src = ServiceLabelSource(2, qualities={"w1": 0.9, "w2": 0.9})
        t, out = start_collect(src, [("a", "b"), ("c", "d")])
        assert [pair for _, pair in src.eligible("w1")] == [("a", "b"),
                                                            ("c", "d")]
        sequence = [("w1", "q00001", ANSWER_MATCH),
                    ("w2", "q00001", ANSWER_MATCH),
                    ("w1", "q00002", ANSWER_NON_MATCH),
                    ("w2", "q00002", ANSWER_MATCH)]
        for worker, qid, answer in sequence:
            assert t.is_alive()
            status, _ = src.submit(worker, qid, answer)
            assert status == 200
        t.join(5.0)
        assert not t.is_alive()
        assert out["failed"] == set()
        got = [(r.question, r.worker, r.answer) for r in out["records"]]
        assert got == [(("a", "b"), "w1", ANSWER_MATCH),
                       (("a", "b"), "w2", ANSWER_MATCH),
                       (("c", "d"), "w1", ANSWER_NON_MATCH),
                       (("c", "d"), "w2", ANSWER_MATCH)]

    def test_submit_validation(self):
        src = ServiceLabelSource(2, qualities={"w1": 0.9, "w2": 0.9})
        t, out = start_collect(src, [("a", "b")],
                               exclude={("a", "b"): {"banned"}})
        assert src.submit("w1", "zzz", ANSWER_MATCH)[0] == 404
        assert src.submit("w1", "q00001", "maybe")[0] == 400
        assert src.submit("banned", "q00001", ANSWER_MATCH)[0] == 409
        assert src.submit("w1", "q00001", ANSWER_MATCH)[0] == 200
        assert src.submit("w1", "q00001", ANSWER_MATCH)[0] == 409
        assert src.eligible("w1") == []
        assert src.submit("w2", "q00001", ANSWER_MATCH)[0] == 200
        t.join(5.0)
        assert not t.is_alive()
        # batch closed: late submission hits an unknown question
        assert src.submit("w3", "q00001", ANSWER_MATCH)[0] == 404

    def test_full_panel_rejects_extra_answers(self):
        src = ServiceLabelSource(1)
        with src.cond:
            src.open["q1"] = _OpenQuestion("q1", ("a", "b"), 0, set())
        assert src.submit("w1", "q1", ANSWER_MATCH)[0] == 409

    def test_unanswerable_when_known_pool_excluded(self):
        src = ServiceLabelSource(1, qualities={"w1": 0.9})
        records, failed = src.collect([("a", "b")], {("a", "b"): {"w1"}})
        assert records == [] and failed == {("a", "b")}

    def test_unanswerable_tracks_seen_workers(self):
        src = ServiceLabelSource(1)
        t, out = start_collect(src, [("a", "b")])
        assert src.submit("w9", "q00001", ANSWER_MATCH)[0] == 200
        t.join(5.0)
        records, failed = src.collect([("c", "d")], {("c", "d"): {"w9"}})
        assert records == [] and failed == {("c", "d")}

    def test_qualities_merge_known_and_seen(self):
        src = ServiceLabelSource(1, qualities={"w1": 0.95})
        t, out = start_collect(src, [("a", "b")])
        src.submit("w2", "q00001", ANSWER_MATCH)
        t.join(5.0)
        assert src.qualities == {"w1": 0.95, "w2": 0.9}

    def test_human_qualities_from_pool_file(self, tmp_path):
        pool = tmp_path / "workers.tsv"
        pool.write_text("alice\thuman\t0.85\nbot\tsimulated\t0.1\n",
                        encoding="utf-8")
        assert human_qualities(pool) == {"alice": 0.85}
        assert human_qualities(None) == {}


class TestHttpApi:
    @pytest.fixture()
    def served(self, toy_engine_prepared):
        src = ServiceLabelSource(2, qualities={"w1": 0.9, "w2": 0.9})
        server = make_server(toy_engine_prepared, src, 0)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        base = f"http://127.0.0.1:{server.server_address[1]}"
        yield base, toy_engine_prepared, src
        server.shutdown()

    def test_session_endpoint(self, served):
        base, eng, _ = served
        status, info = get_json(f"{base}/api/session")
        assert status == 200
        assert info["asked"] == 0 and info["loop"] == 0
        assert info["remaining"] == len(eng.state.unresolved)

    def test_progress_endpoint(self, served):
        base, eng, _ = served
        status, snap = get_json(f"{base}/api/progress")
        assert status == 200
        assert snap["n_candidates"] == len(eng.m_c)
        assert snap["questions_asked"] == 0

    def test_questions_require_worker_id(self, served):
        base, _, _ = served
        assert get_json(f"{base}/api/questions")[0] == 400

    def test_question_payload_shape(self, served):
        base, eng, src = served
        pairs = sorted(eng.state.unresolved)[:2]
        t, out = start_collect(src, pairs)
        status, items = get_json(f"{base}/api/questions?worker_id=w1")
        assert status == 200 and len(items) == 2
        for item in items:
            assert item["u1"] in eng.kb1.ents
            assert item["u2"] in eng.kb2.ents
            for attr in item["attributes"]:
                assert {"attr1", "attr2", "values1", "values2"} <= set(attr)
            hood = item["neighborhood"]
            assert len(hood["side1"]) <= 5 and len(hood["side2"]) <= 5
        for item in items:
            for w in ("w1", "w2"):
                code, _ = post_json(f"{base}/api/labels",
                                    {"worker_id": w,
                                     "question_id": item["question_id"],
                                     "answer": ANSWER_NON_MATCH})
                assert code == 200
        t.join(5.0)
        assert not t.is_alive()

    def test_duplicate_label_conflict(self, served):
        base, eng, src = served
        pair = sorted(eng.state.unresolved)[0]
        t, out = start_collect(src, [pair])
        qid = src.eligible("w1")[0][0]
        body = {"worker_id": "w1", "question_id": qid,
                "answer": ANSWER_MATCH}
        assert post_json(f"{base}/api/labels", body)[0] == 200
        assert post_json(f"{base}/api/labels", body)[0] == 409
        assert post_json(f"{base}/api/labels",
                         {"worker_id": "w2", "question_id": qid,
                          "answer": ANSWER_MATCH})[0] == 200
        t.join(5.0)

    def test_label_request_validation(self, served):
        base, _, _ = served
        assert post_json(f"{base}/api/labels", {"worker_id": "w"})[0] == 400
        assert post_json(f"{base}/api/labels",
                         {"worker_id": "w", "question_id": "q",
                          "answer": "perhaps"})[0] == 400
        assert post_json(f"{base}/api/labels",
                         {"worker_id": "w", "question_id": "nope",
                          "answer": ANSWER_MATCH})[0] == 404

    def test_unknown_api_endpoint(self, served):
        base, _, _ = served
        assert get_json(f"{base}/api/nope")[0] == 404
        assert post_json(f"{base}/api/nope", {})[0] == 404

    def test_static_assets(self, toy_engine_prepared, tmp_path):
        (tmp_path / "index.html").write_text("<html>ui</html>",
                                             encoding="utf-8")
        (tmp_path / "assets").mkdir()
        (tmp_path / "assets" / "app.js").write_text("console.log(1)",
                                                    encoding="utf-8")
        src = ServiceLabelSource(1)
        server = make_server(toy_engine_prepared, src, 0,
                             static_dir=tmp_path)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        base = f"http://127.0.0.1:{server.server_address[1]}"
        try:
            with urllib.request.urlopen(f"{base}/", timeout=10) as resp:
                assert resp.status == 200
                assert b"ui" in resp.read()
            with urllib.request.urlopen(f"{base}/assets/app.js",
                                        timeout=10) as resp:
                assert resp.status == 200
            assert get_json(f"{base}/missing.js")[0] == 404
            assert get_json(f"{base}/../secret")[0] == 404
        finally:
            server.shutdown()


class TestServiceDrivenRun:
    def test_engine_completes_against_live_labeler(self, tmp_path):
        log_path = tmp_path / "labels.tsv"
        cfg = toy_config(budget=20, assignments_per_question=1,
                         label_log=str(log_path))
        src = ServiceLabelSource(1, qualities={"w1": 0.99})
        eng = Engine(cfg, label_source=src)
        done = threading.Event()
        expected = []

        def drive():
            while not done.is_set():
                for qid, pair in src.eligible("w1"):
                    answer = (ANSWER_MATCH if pair in eng.gold
                              else ANSWER_NON_MATCH)
                    status, _ = src.submit("w1", qid, answer)
                    if status == 200:
                        expected.append("\t".join((
                            escape_field(eng.kb1.ents.name(pair[0])),
                            escape_field(eng.kb2.ents.name(pair[1])),
                            "w1", answer)))
                time.sleep(0.002)

        worker = threading.Thread(target=drive, daemon=True)
        worker.start()
        try:
            result = eng.run()
        finally:
            done.set()
        worker.join(5.0)
        assert result.metrics.questions_asked == 20
        assert result.metrics.f1 >= 0.8
        # the label log reproduces the live session answer-for-answer
        assert log_path.read_text(encoding="utf-8").splitlines() == expected
