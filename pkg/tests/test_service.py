"""HTTP service endpoints and error-to-status mapping."""

from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from scenemem.errors import (
    ConfigError,
    CorpusParseError,
    LockError,
    ProviderError,
    SceneMemError,
)
from scenemem.persistence import LOCK_NAME
from scenemem.service.app import create_app, status_for


@pytest.fixture
def client(duet_workspace, duet_config):
    workspace, corpus = duet_workspace
    app = create_app(workspace, duet_config)
    with TestClient(app) as test_client:
        yield test_client, str(corpus), workspace


def ingest(client, corpus):
    response = client.post("/ingest", json={"corpus_path": corpus})
    assert response.status_code == 200
    return response


def build(client):
    response = client.post("/build", json={})
    assert response.status_code == 200
    return response


class TestStatusMapping:
    def test_parse_and_config_errors_are_bad_requests(self):
        assert status_for(CorpusParseError("x")) == 400
        assert status_for(ConfigError("x")) == 400

    def test_lock_and_persistence_errors_are_conflicts(self):
        from scenemem.errors import PersistenceError

        assert status_for(LockError("x")) == 409
        assert status_for(PersistenceError("x")) == 409

    def test_provider_errors_are_bad_gateway(self):
        assert status_for(ProviderError("x")) == 502

    def test_other_engine_errors_default_to_bad_request(self):
        assert status_for(SceneMemError("x")) == 400


class TestHealthAndConfig:
    def test_health_reports_missing_index(self, client):
        test_client, _, _ = client
        doc = test_client.get("/health").json()
        assert doc["status"] == "ok"
        assert doc["index_built"] is False
        assert doc["version"]

    def test_health_flips_after_build(self, client):
        test_client, corpus, _ = client
        ingest(test_client, corpus)
        build(test_client)
        assert test_client.get("/health").json()["index_built"] is True

    def test_config_returns_engine_settings(self, client):
        test_client, _, _ = client
        doc = test_client.get("/config").json()
        assert doc["w"] == 1
        assert doc["k"] == 5
        assert doc["lexicon"] == ["Caroline", "Melanie", "Gina"]


class TestIngestEndpoint:
    def test_ingest_reports_counts(self, client):
        test_client, corpus, workspace = client
        doc = ingest(test_client, corpus).json()
        assert doc["sessions"] == 2
        assert doc["messages"] == 5
        assert doc["path"] == str(workspace / "store.json")

    def test_missing_corpus_is_bad_request(self, client):
        test_client, _, _ = client
        response = test_client.post("/ingest", json={"corpus_path": "/nope/missing.json"})
        assert response.status_code == 400
        assert response.json()["kind"] == "CorpusParseError"

    def test_request_body_is_validated(self, client):
        test_client, _, _ = client
        assert test_client.post("/ingest", json={}).status_code == 422


class TestBuildEndpoint:
    def test_build_reports_counts(self, client):
        test_client, corpus, _ = client
        ingest(test_client, corpus)
        doc = build(test_client).json()
        assert doc["views"] == 5
        assert doc["scenes"] == 5
        assert doc["characters"] == 3
        assert doc["phrases"] == 9
        assert doc["triples"] == 13

    def test_build_without_ingest_conflicts(self, client):
        test_client, _, _ = client
        response = test_client.post("/build", json={})
        assert response.status_code == 409
        assert response.json()["kind"] == "PersistenceError"

    def test_build_with_empty_body(self, client):
        test_client, corpus, _ = client
        ingest(test_client, corpus)
        assert test_client.post("/build").status_code == 200

    def test_locked_index_conflicts(self, client, duet_config):
        test_client, corpus, workspace = client
        ingest(test_client, corpus)
        index_dir = workspace / duet_config.index_dir
        index_dir.mkdir(parents=True, exist_ok=True)
        (index_dir / LOCK_NAME).write_text("999")
        response = test_client.post("/build", json={})
        assert response.status_code == 409
        assert response.json()["kind"] == "LockError"


class TestQueryEndpoint:
    def test_fused_query(self, client):
        test_client, corpus, _ = client
        ingest(test_client, corpus)
        build(test_client)
        response = test_client.post(
            "/query", json={"question": "Who earned first place at the dance competition?"}
        )
        doc = response.json()
        assert response.status_code == 200
        assert doc["mode"] == "fused"
        assert doc["k"] == 5
        assert doc["evidence"]
        assert doc["semantic"]["passages"]
        assert doc["episodic"]["scenes"]

    def test_mode_and_k_are_passed_through(self, client):
        test_client, corpus, _ = client
        ingest(test_client, corpus)
        build(test_client)
        doc = test_client.post(
            "/query", json={"question": "pastries", "mode": "semantic", "k": 2}
        ).json()
        assert doc["mode"] == "semantic"
        assert doc["k"] == 2
        assert len(doc["evidence"]) == 2
        assert doc["episodic"] is None

    def test_answer_requested(self, client):
        test_client, corpus, _ = client
        ingest(test_client, corpus)
        build(test_client)
        doc = test_client.post(
            "/query",
            json={"question": "Which drink at the cafe is wonderful?", "answer": True},
        ).json()
        assert doc["answer"]

    def test_query_before_build_conflicts(self, client):
        test_client, corpus, _ = client
        ingest(test_client, corpus)
        response = test_client.post("/query", json={"question": "anything"})
        assert response.status_code == 409
        assert response.json()["kind"] == "PersistenceError"

    def test_bad_mode_is_bad_request(self, client):
        test_client, corpus, _ = client
        ingest(test_client, corpus)
        build(test_client)
        response = test_client.post("/query", json={"question": "x", "mode": "psychic"})
        assert response.status_code == 400
        assert response.json()["kind"] == "SceneMemError"


class TestEvalEndpoint:
    QUESTIONS = [
        {"question": "Where are the best pastries?", "answer": "cafe", "category": 3},
    ]

    def prepared(self, client):
        test_client, corpus, _ = client
        ingest(test_client, corpus)
        build(test_client)
        return test_client

    def test_eval_returns_reports_and_table(self, client):
        test_client = self.prepared(client)
        doc = test_client.post(
            "/eval", json={"questions": self.QUESTIONS, "judge": False}
        ).json()
        assert len(doc["reports"]) == 1
        assert doc["reports"][0]["label"] == "run"
        assert doc["reports"][0]["overall"]["f1"] is not None
        assert "overall" in doc["table"]

    def test_eval_sweep(self, client):
        test_client = self.prepared(client)
        doc = test_client.post(
            "/eval",
            json={
                "questions": self.QUESTIONS,
                "judge": False,
                "sweep_param": "k",
                "sweep_values": [1, 2],
            },
        ).json()
        assert [r["label"] for r in doc["reports"]] == ["k=1", "k=2"]

    def test_eval_ablation(self, client):
        test_client = self.prepared(client)
        doc = test_client.post(
            "/eval",
            json={"questions": self.QUESTIONS, "judge": False, "ablations": ["slot3"]},
        ).json()
        assert doc["reports"][0]["config"]["fusion"] == "slot3"

    def test_unknown_ablation_is_bad_request(self, client):
        test_client = self.prepared(client)
        response = test_client.post(
            "/eval", json={"questions": self.QUESTIONS, "ablations": ["bogus"]}
        )
        assert response.status_code == 400
        assert response.json()["kind"] == "ConfigError"
