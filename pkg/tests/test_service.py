"""Control-service wire protocol tests over an in-process client."""

from __future__ import annotations

import json
import time

import pytest
from fastapi.testclient import TestClient

from evonet.engine import GaConfig, run
from evonet.model import loads_network, network_digest
from evonet.service import create_app

SMALL = {
    "n_clients": 5,
    "n_servers": 2,
    "grid_width": 40,
    "grid_height": 40,
    "min_spacing": 3,
    "generations": 8,
    "seed": 7,
}


@pytest.fixture
def client():
    app = create_app(ui_dir="/nonexistent")
    with TestClient(app) as c:
        yield c


def start(client, **overrides) -> str:
    body = {**SMALL, **overrides}
    resp = client.post("/sessions", json=body)
    assert resp.status_code == 200, resp.text
    return resp.json()["run_id"]


def wait_finished(client, run_id: str, timeout: float = 10.0) -> dict:
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        state = client.get(f"/sessions/{run_id}").json()
        if state["mode"] == "finished":
            return state
        time.sleep(0.02)
    raise AssertionError("session never finished")


class TestSessionLifecycle:
    def test_new_session_is_paused_at_generation_zero(self, client):
        resp = client.post("/sessions", json=SMALL)
        body = resp.json()
        assert body["state"]["mode"] == "paused"
        assert body["state"]["current_generation"] == 0
        assert body["state"]["latest_record"] is None
        assert body["state"]["live_config"]["seed"] == 7
        assert body["state"]["elite_network"]["nodes"]

    def test_invalid_config_rejected_with_field_diagnostics(self, client):
        resp = client.post("/sessions", json={"q": 1})
        assert resp.status_code == 400
        assert "q" in resp.json()["errors"]

    def test_two_sessions_are_independent(self, client):
        a, b = start(client), start(client)
        assert a != b
        client.post(f"/sessions/{a}/step", json={"n_generations": 3})
        state_b = client.get(f"/sessions/{b}").json()
        assert state_b["current_generation"] == 0

    def test_unknown_session_is_404(self, client):
        for path in ("", "/config", "/step", "/records", "/network", "/stream"):
            method = client.get if path in ("", "/records", "/network", "/stream") else client.post
            if path == "/config":
                resp = client.patch("/sessions/nope/config", json={})
            else:
                resp = method(f"/sessions/nope{path}")
            assert resp.status_code == 404


class TestStepPauseResume:
    def test_step_advances_exactly_n_generations(self, client):
        run_id = start(client)
        state = client.post(f"/sessions/{run_id}/step", json={"n_generations": 3}).json()
        assert state["current_generation"] == 3
        assert state["mode"] == "paused"
        assert state["latest_record"]["generation"] == 3

    def test_step_default_is_one_generation(self, client):
        run_id = start(client)
        state = client.post(f"/sessions/{run_id}/step", json={}).json()
        assert state["current_generation"] == 1

    def test_step_to_budget_finishes(self, client):
        run_id = start(client)
        state = client.post(f"/sessions/{run_id}/step", json={"n_generations": 99}).json()
        assert state["mode"] == "finished"
        assert state["current_generation"] == SMALL["generations"]

    def test_step_while_running_rejected(self, client):
        run_id = start(client, generations=400, n_clients=12)
        client.post(f"/sessions/{run_id}/resume")
        resp = client.post(f"/sessions/{run_id}/step", json={})
        assert resp.status_code == 409
        client.post(f"/sessions/{run_id}/pause")

    def test_step_when_finished_rejected(self, client):
        run_id = start(client, generations=1)
        client.post(f"/sessions/{run_id}/step", json={})
        resp = client.post(f"/sessions/{run_id}/step", json={})
        assert resp.status_code == 409

    def test_negative_step_count_rejected(self, client):
        run_id = start(client)
        resp = client.post(f"/sessions/{run_id}/step", json={"n_generations": -2})
        assert resp.status_code == 400

    def test_resume_runs_to_the_budget(self, client):
        run_id = start(client)
        state = client.post(f"/sessions/{run_id}/resume").json()
        assert state["mode"] in ("running", "finished")
        state = wait_finished(client, run_id)
        assert state["current_generation"] == SMALL["generations"]

    def test_pause_then_resume_loses_nothing(self, client):
        run_id = start(client, generations=40)
        client.post(f"/sessions/{run_id}/resume")
        client.post(f"/sessions/{run_id}/pause")
        state = client.get(f"/sessions/{run_id}").json()
        assert state["mode"] in ("paused", "finished")
        client.post(f"/sessions/{run_id}/resume")
        wait_finished(client, run_id)
        records = client.get(f"/sessions/{run_id}/records").json()
        assert [r["generation"] for r in records] == list(range(1, 41))

    def test_resume_after_finish_rejected(self, client):
        run_id = start(client, generations=1)
        client.post(f"/sessions/{run_id}/step", json={})
        assert client.post(f"/sessions/{run_id}/resume").status_code == 409
        assert client.post(f"/sessions/{run_id}/pause").status_code == 409


class TestRecordsAndNetwork:
    def test_records_from_index(self, client):
        run_id = start(client)
        client.post(f"/sessions/{run_id}/step", json={"n_generations": 6})
        records = client.get(f"/sessions/{run_id}/records", params={"from": 4}).json()
        assert [r["generation"] for r in records] == [4, 5, 6]

    def test_records_default_returns_all(self, client):
        run_id = start(client)
        client.post(f"/sessions/{run_id}/step", json={"n_generations": 5})
        records = client.get(f"/sessions/{run_id}/records").json()
        assert [r["generation"] for r in records] == [1, 2, 3, 4, 5]

    def test_network_is_the_elite_in_model_serialization(self, client):
        run_id = start(client)
        client.post(f"/sessions/{run_id}/step", json={"n_generations": 4})
        resp = client.get(f"/sessions/{run_id}/network")
        net = loads_network(json.dumps(resp.json()))
        state = client.get(f"/sessions/{run_id}").json()
        assert network_digest(net) == network_digest(
            loads_network(json.dumps(state["elite_network"]))
        )

    def test_latest_record_matches_records_tail(self, client):
        run_id = start(client)
        client.post(f"/sessions/{run_id}/step", json={"n_generations": 2})
        state = client.get(f"/sessions/{run_id}").json()
        records = client.get(f"/sessions/{run_id}/records").json()
        assert state["latest_record"] == records[-1]


class TestConfigPatch:
    def test_patch_while_paused_is_immediate(self, client):
        run_id = start(client)
        state = client.patch(
            f"/sessions/{run_id}/config", json={"link_failure_prob": 0.25}
        ).json()
        assert state["live_config"]["link_failure_prob"] == 0.25

    def test_invalid_patch_rejected_and_state_unchanged(self, client):
        run_id = start(client)
        resp = client.patch(f"/sessions/{run_id}/config", json={"u_low": 2.0})
        assert resp.status_code == 400
        assert "u_high" in resp.json()["errors"] or "u_low" in resp.json()["errors"]
        state = client.get(f"/sessions/{run_id}").json()
        assert state["live_config"]["u_low"] == 0.75

    def test_unknown_field_rejected(self, client):
        run_id = start(client)
        resp = client.patch(f"/sessions/{run_id}/config", json={"nope": 1})
        assert resp.status_code == 400
        assert "nope" in resp.json()["errors"]

    def test_patch_validates_against_live_config(self, client):
        run_id = start(client)
        client.patch(f"/sessions/{run_id}/config", json={"u_high": 0.9})
        resp = client.patch(f"/sessions/{run_id}/config", json={"u_low": 0.88})
        assert resp.status_code == 200
        assert client.get(f"/sessions/{run_id}").json()["live_config"]["u_low"] == 0.88

    def test_patch_changes_subsequent_generations(self, client):
        plain, patched = start(client), start(client)
        for run_id in (plain, patched):
            client.post(f"/sessions/{run_id}/step", json={"n_generations": 3})
        client.patch(f"/sessions/{patched}/config", json={"link_failure_prob": 0.9})
        for run_id in (plain, patched):
            client.post(f"/sessions/{run_id}/step", json={"n_generations": 5})
        recs_plain = client.get(f"/sessions/{plain}/records").json()
        recs_patched = client.get(f"/sessions/{patched}/records").json()
        assert recs_plain[:3] == recs_patched[:3]
        assert recs_plain[3:] != recs_patched[3:]

    def test_q_patch_resizes_the_next_population(self, client):
        run_id = start(client)
        client.patch(f"/sessions/{run_id}/config", json={"q": 3})
        state = client.post(f"/sessions/{run_id}/step", json={}).json()
        assert len(state["latest_record"]["population_fitness"]) == 15
        state = client.post(f"/sessions/{run_id}/step", json={}).json()
        assert len(state["latest_record"]["population_fitness"]) == 6

    def test_patch_after_finish_rejected(self, client):
        run_id = start(client, generations=1)
        client.post(f"/sessions/{run_id}/step", json={})
        resp = client.patch(f"/sessions/{run_id}/config", json={"q": 3})
        assert resp.status_code == 409


class TestParityWithHeadlessRun:
    def test_stepped_session_equals_run(self, client):
        run_id = start(client)
        client.post(f"/sessions/{run_id}/step", json={"n_generations": SMALL["generations"]})
        got = client.get(f"/sessions/{run_id}/records").json()
        cfg = GaConfig.from_doc(SMALL)
        expected = [r.to_doc() for r in run(cfg)]
        assert got == expected

    def test_resumed_session_equals_run(self, client):
        run_id = start(client)
        client.post(f"/sessions/{run_id}/resume")
        wait_finished(client, run_id)
        got = client.get(f"/sessions/{run_id}/records").json()
        expected = [r.to_doc() for r in run(GaConfig.from_doc(SMALL))]
        assert got == expected


def read_sse_generations(resp) -> list[int]:
    events = []
    for line in resp.iter_lines():
        if line.startswith("event: "):
            assert line == "event: generation"
        elif line.startswith("data: "):
            events.append(json.loads(line[len("data: "):]))
    return [e["generation"] for e in events]


class TestStream:
    def test_stream_replays_finished_run(self, client):
        run_id = start(client)
        client.post(f"/sessions/{run_id}/step", json={"n_generations": 99})
        with client.stream("GET", f"/sessions/{run_id}/stream") as resp:
            assert resp.headers["content-type"].startswith("text/event-stream")
            gens = read_sse_generations(resp)
        assert gens == list(range(1, SMALL["generations"] + 1))

    def test_stream_from_offset(self, client):
        run_id = start(client)
        client.post(f"/sessions/{run_id}/step", json={"n_generations": 99})
        with client.stream(
            "GET", f"/sessions/{run_id}/stream", params={"from": 5}
        ) as resp:
            gens = read_sse_generations(resp)
        assert gens == list(range(5, SMALL["generations"] + 1))

    def test_live_stream_is_gap_free(self, client):
        run_id = start(client, generations=25)
        client.post(f"/sessions/{run_id}/resume")
        with client.stream("GET", f"/sessions/{run_id}/stream") as resp:
            gens = read_sse_generations(resp)
        assert gens == list(range(1, 26))

    def test_stream_payload_matches_poll_view(self, client):
        run_id = start(client)
        client.post(f"/sessions/{run_id}/step", json={"n_generations": 99})
        with client.stream("GET", f"/sessions/{run_id}/stream") as resp:
            events = []
            for line in resp.iter_lines():
                if line.startswith("data: "):
                    events.append(json.loads(line[len("data: "):]))
        polled = client.get(f"/sessions/{run_id}/records").json()
        assert events == polled
