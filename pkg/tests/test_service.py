"""Labeling service: batch fencing, default-deferred, metrics consistency."""

import pytest
from fastapi.testclient import TestClient

from ptdiscovery.forest import Hyperparams
from ptdiscovery.loop import PoolState, SelectionPolicy
from ptdiscovery.service import LoopRuntime, create_app


HP = Hyperparams(n_trees=16, n_examples_per_tree=60, positive_fraction=0.2)


@pytest.fixture(scope="module")
def runtime(small_world, small_pipeline):
    pools = PoolState.from_candidates(small_pipeline.store.phrases, small_world.v1.pts)
    return LoopRuntime(
        store=small_pipeline.store,
        pools=pools,
        catalog=small_world.catalog,
        query_log=small_world.query_log,
        hp=HP,
        policy=SelectionPolicy.top_k(10),
        master_seed=42,
    )


@pytest.fixture(scope="module")
def client(runtime):
    return TestClient(create_app(runtime))


def make_session(client, **body):
    resp = client.post("/api/session", json=body or None)
    assert resp.status_code == 200
    return resp.json()["session_id"]


class TestSessionAndBatch:
    def test_fresh_session_gets_policy_sized_batch(self, client):
        sid = make_session(client)
        resp = client.get(f"/api/session/{sid}/batch")
        assert resp.status_code == 200
        payload = resp.json()
        assert len(payload["candidates"]) == 10
        assert payload["batch_token"]
        confs = [c["confidence"] for c in payload["candidates"]]
        assert confs == sorted(confs, reverse=True)

    def test_get_batch_idempotent_until_submission(self, client):
        sid = make_session(client)
        first = client.get(f"/api/session/{sid}/batch").json()
        second = client.get(f"/api/session/{sid}/batch").json()
        assert first["batch_token"] == second["batch_token"]
        assert [c["phrase"] for c in first["candidates"]] == [
            c["phrase"] for c in second["candidates"]
        ]

    def test_unknown_session(self, client):
        resp = client.get("/api/session/nope/batch")
        assert resp.status_code == 404
        assert resp.json()["code"] == "UnknownSession"

    def test_policy_override(self, client):
        sid = make_session(client, top_k=4)
        resp = client.get(f"/api/session/{sid}/batch")
        assert len(resp.json()["candidates"]) == 4

    def test_context_snippets_contain_phrase(self, client):
        sid = make_session(client, top_k=5)
        batch = client.get(f"/api/session/{sid}/batch").json()["candidates"]
        for card in batch:
            for title in card["sample_titles"]:
                assert card["phrase"] in title
            for query in card["sample_queries"]:
                assert card["phrase"] in query


class TestSubmitLabels:
    def test_roundtrip_records_3_2_5(self, client, runtime):
        sid = make_session(client, top_k=10)
        batch = client.get(f"/api/session/{sid}/batch").json()
        phrases = [c["phrase"] for c in batch["candidates"]]
        before = runtime.pools
        decisions = [{"phrase": p, "verdict": "approved"} for p in phrases[:3]]
        decisions += [{"phrase": p, "verdict": "rejected"} for p in phrases[3:5]]
        resp = client.post(
            f"/api/session/{sid}/labels",
            json={"batch_token": batch["batch_token"], "decisions": decisions},
        )
        assert resp.status_code == 200
        report = resp.json()
        assert report["presented"] == 10
        assert report["approved"] == 3
        assert report["precision"] == pytest.approx(0.3)
        after = runtime.pools
        assert len(after.positive - before.positive) == 3
        assert len(after.rejected - before.rejected) == 2
        assert len(after.deferred - before.deferred) == 5
        metrics = client.get("/api/metrics").json()
        assert metrics["reports"][-1] == report

    def test_stale_token_refused_and_single_application(self, client, runtime):
        sid = make_session(client, top_k=6)
        batch = client.get(f"/api/session/{sid}/batch").json()
        token = batch["batch_token"]
        phrases = [c["phrase"] for c in batch["candidates"]]
        ok = client.post(
            f"/api/session/{sid}/labels",
            json={
                "batch_token": token,
                "decisions": [{"phrase": phrases[0], "verdict": "approved"}],
            },
        )
        assert ok.status_code == 200
        n_reports = len(runtime.reports)
        retry = client.post(
            f"/api/session/{sid}/labels",
            json={
                "batch_token": token,
                "decisions": [{"phrase": phrases[1], "verdict": "approved"}],
            },
        )
        assert retry.status_code == 409
        assert retry.json()["code"] == "StaleBatch"
        assert len(runtime.reports) == n_reports

    def test_decision_outside_batch(self, client):
        sid = make_session(client, top_k=3)
        batch = client.get(f"/api/session/{sid}/batch").json()
        resp = client.post(
            f"/api/session/{sid}/labels",
            json={
                "batch_token": batch["batch_token"],
                "decisions": [{"phrase": "definitely not here", "verdict": "approved"}],
            },
        )
        assert resp.status_code == 404
        assert resp.json()["code"] == "UnknownPhrase"

    def test_bad_verdict_rejected_by_validation(self, client):
        sid = make_session(client, top_k=3)
        batch = client.get(f"/api/session/{sid}/batch").json()
        resp = client.post(
            f"/api/session/{sid}/labels",
            json={
                "batch_token": batch["batch_token"],
                "decisions": [{"phrase": "x", "verdict": "maybe"}],
            },
        )
        assert resp.status_code == 422


class TestReadOnlyEndpoints:
    def test_metrics_matches_latest_report(self, client, runtime):
        metrics = client.get("/api/metrics").json()
        if runtime.reports:
            last = runtime.reports[-1]
            assert metrics["reports"][-1]["iteration"] == last.iteration
            assert metrics["reports"][-1]["precision"] == last.precision
        sizes = metrics["pool_sizes"]
        assert sum(sizes.values()) == len(runtime.store.phrases)

    def test_get_does_not_mutate(self, client, runtime):
        before = (runtime.pools, len(runtime.reports))
        client.get("/api/metrics")
        sid = make_session(client, top_k=3)
        client.get(f"/api/session/{sid}/batch")
        client.get(f"/api/session/{sid}/batch")
        assert runtime.pools is before[0]
        assert len(runtime.reports) == before[1]

    def test_candidate_context_endpoint(self, client, runtime):
        phrase = runtime.store.phrases[0]
        resp = client.get(f"/api/candidates/{phrase}/context")
        assert resp.status_code == 200
        payload = resp.json()
        assert payload["phrase"] == phrase
        assert "quality_score" in payload["key_features"]

    def test_context_unknown_phrase(self, client):
        resp = client.get("/api/candidates/zzz%20not%20here/context")
        assert resp.status_code == 404
        assert resp.json()["code"] == "UnknownPhrase"
