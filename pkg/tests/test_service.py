import json

import pytest
from fastapi.testclient import TestClient

from ake.goldstandard import REJECT_FAST_COMPLETION, aggregate, filter_bad_hits, load_hits
from ake.service import AnnotationService, build_app

from conftest import make_doc


class FakeClock:
    def __init__(self):
        self.now = 1000.0

    def __call__(self):
        return self.now

    def advance(self, seconds):
        self.now += seconds


@pytest.fixture()
def stories():
    return [
        make_doc("Alpha story", "The quick brown fox jumped the fence.", doc_id="a1"),
        make_doc("Beta story", "Rivers kept rising through the night.", doc_id="b2"),
    ]


@pytest.fixture()
def setup(tmp_path, stories):
    clock = FakeClock()
    service = AnnotationService(stories, data_dir=tmp_path, quota=2, clock=clock)
    client = TestClient(build_app(service))
    return service, client, clock


class TestAssignment:
    def test_next_returns_tokenized_story_and_guidelines(self, setup):
        _, client, _ = setup
        resp = client.get("/api/stories/next", params={"worker": "w1"})
        assert resp.status_code == 200
        payload = resp.json()
        assert payload["story"]["story_id"] == "a1"
        assert payload["story"]["sentences"][0]["from_title"]
        assert payload["story"]["sentences"][0]["tokens"][0] == "Alpha"
        assert "20" in payload["guidelines"]

    def test_least_annotated_first(self, setup):
        service, client, clock = setup
        client.get("/api/stories/next", params={"worker": "w1"})
        clock.advance(60)
        client.post(
            "/api/stories/a1/annotations",
            json={
                "worker": "w1",
                "selections": [{"sentence": 1, "start_token": 1, "end_token": 3}],
            },
        )
        resp = client.get("/api/stories/next", params={"worker": "w2"})
        assert resp.json()["story"]["story_id"] == "b2"

    def test_open_session_reserved(self, setup):
        _, client, _ = setup
        first = client.get("/api/stories/next", params={"worker": "w1"}).json()
        again = client.get("/api/stories/next", params={"worker": "w1"}).json()
        assert first["story"]["story_id"] == again["story"]["story_id"]
        assert first["session_id"] == again["session_id"]

    def test_exhaustion_404(self, setup):
        service, client, clock = setup
        for story_id in ("a1", "b2"):
            client.get("/api/stories/next", params={"worker": "w1"})
            clock.advance(45)
            client.post(
                f"/api/stories/{story_id}/annotations",
                json={
                    "worker": "w1",
                    "selections": [{"sentence": 0, "start_token": 0, "end_token": 1}],
                },
            )
        resp = client.get("/api/stories/next", params={"worker": "w1"})
        assert resp.status_code == 404


class TestSubmission:
    def submit(self, client, worker, story_id):
        return client.post(
            f"/api/stories/{story_id}/annotations",
            json={
                "worker": worker,
                "selections": [{"sentence": 1, "start_token": 1, "end_token": 3}],
            },
        )

    def test_duration_is_server_computed(self, setup):
        _, client, clock = setup
        client.get("/api/stories/next", params={"worker": "w1"})
        clock.advance(37.5)
        resp = self.submit(client, "w1", "a1")
        assert resp.status_code == 200
        assert resp.json()["duration_seconds"] == pytest.approx(37.5)

    def test_duplicate_submission_conflict(self, setup):
        _, client, clock = setup
        client.get("/api/stories/next", params={"worker": "w1"})
        clock.advance(60)
        assert self.submit(client, "w1", "a1").status_code == 200
        assert self.submit(client, "w1", "a1").status_code == 409

    def test_submission_without_session_rejected(self, setup):
        _, client, _ = setup
        resp = self.submit(client, "w1", "a1")
        assert resp.status_code == 400

    def test_span_outside_story_rejected(self, setup):
        _, client, clock = setup
        client.get("/api/stories/next", params={"worker": "w1"})
        clock.advance(60)
        resp = client.post(
            "/api/stories/a1/annotations",
            json={
                "worker": "w1",
                "selections": [{"sentence": 7, "start_token": 0, "end_token": 1}],
            },
        )
        assert resp.status_code == 422

    def test_unknown_story_404(self, setup):
        _, client, _ = setup
        resp = self.submit(client, "w1", "zzz")
        assert resp.status_code == 404

    def test_log_survives_restart(self, setup, tmp_path, stories):
        service, client, clock = setup
        client.get("/api/stories/next", params={"worker": "w1"})
        clock.advance(60)
        self.submit(client, "w1", "a1")
        # a new service instance over the same data dir sees the HIT
        revived = AnnotationService(stories, data_dir=tmp_path, quota=2, clock=clock)
        assert any(h.worker_id == "w1" for h in revived._hits)

    def test_torn_log_line_skipped_on_restart(self, setup, tmp_path, stories, caplog):
        service, client, clock = setup
        client.get("/api/stories/next", params={"worker": "w1"})
        clock.advance(60)
        self.submit(client, "w1", "a1")
        # simulate a crash mid-append
        with service.log_path.open("a") as fh:
            fh.write('{"hit_id": "torn')
        with caplog.at_level("WARNING"):
            revived = AnnotationService(stories, data_dir=tmp_path, quota=2, clock=clock)
        assert len(revived._hits) == 1
        assert "unparseable" in caplog.text


class TestExport:
    def test_fast_session_flagged(self, setup):
        _, client, clock = setup
        client.get("/api/stories/next", params={"worker": "w1"})
        clock.advance(25)
        client.post(
            "/api/stories/a1/annotations",
            json={
                "worker": "w1",
                "selections": [{"sentence": 1, "start_token": 1, "end_token": 3}],
            },
        )
        lines = client.get("/api/export").text.strip().splitlines()
        assert len(lines) == 1
        record = json.loads(lines[0])
        assert REJECT_FAST_COMPLETION in record["flags"]

    def test_export_aggregate_round_trip(self, setup, stories, tmp_path):
        _, client, clock = setup
        # w1 annotates both stories, then w2 gets a1 again (tie on counts).
        for worker, expect in (("w1", "a1"), ("w1", "b2"), ("w2", "a1")):
            payload = client.get("/api/stories/next", params={"worker": worker}).json()
            assert payload["story"]["story_id"] == expect
            clock.advance(90)
            resp = client.post(
                f"/api/stories/{expect}/annotations",
                json={
                    "worker": worker,
                    "selections": [{"sentence": 1, "start_token": 1, "end_token": 3}],
                },
            )
            assert resp.status_code == 200
        export = client.get("/api/export").text
        hits_file = tmp_path / "export.jsonl"
        hits_file.write_text(export)
        hits = load_hits(hits_file, stories)
        good, rejected = filter_bad_hits(hits)
        assert rejected == []
        gs = aggregate(good)
        assert gs.stories["a1"].votes == {"quick brown": 2}
        assert gs.stories["b2"].votes == {"kept rising": 1}
