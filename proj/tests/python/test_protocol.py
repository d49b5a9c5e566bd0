import json

import jsonschema
import pytest

import converse
from conftest import load_schema

WIRE = load_schema("wire_protocol_v1.schema.json")
DIALOGUE = load_schema("dialogue_v1.schema.json")


def send(service, message):
    jsonschema.validate(message, WIRE)
    reply = json.loads(service.handle(json.dumps(message)))
    jsonschema.validate(reply, WIRE)
    return reply


def test_session_lifecycle(tmp_path):
    log = tmp_path / "dialogues.jsonl"
    svc = converse.ChatService(policy="random", log_path=str(log), seed=4, embedding_dim=16)
    start = send(svc, {"v": 1, "type": "start"})
    sid = start["session_id"]
    for text in ["hi", "what is your favourite movie?", "tell me a story"]:
        r = send(svc, {"v": 1, "type": "user", "session_id": sid, "text": text})
        assert r["type"] == "response" and r["text"]
        assert r["candidates"]
        if "distribution" in r:
            assert len(r["distribution"]) == len(r["candidates"])
            assert sum(r["distribution"]) == pytest.approx(1.0)
        else:
            assert any(c["priority"] for c in r["candidates"])
        assert r["text"] in [c["text"] for c in r["candidates"]]
    bad = send(svc, {"v": 1, "type": "end", "session_id": sid, "rating": 7})
    assert bad["type"] == "error"
    end = send(svc, {"v": 1, "type": "end", "session_id": sid, "rating": 4.5})
    assert end["rating"] == 4.5
    assert svc.active_sessions == 0

    lines = log.read_text().splitlines()
    assert len(lines) == 1
    record = json.loads(lines[0])
    jsonschema.validate(record, DIALOGUE)
    assert record["final_score"] == 4.5
    assert converse.count_dialogues(str(log)) == 1


def test_errors_conform():
    svc = converse.ChatService(embedding_dim=16)
    for raw in ["{oops", json.dumps({"v": 9, "type": "start"}), json.dumps({"v": 1, "type": "user"})]:
        r = json.loads(svc.handle(raw))
        jsonschema.validate(r, WIRE)
        assert r["type"] == "error"


def test_quiet_mode_has_no_candidates():
    svc = converse.ChatService(embedding_dim=16, debug=False)
    sid = json.loads(svc.handle(json.dumps({"v": 1, "type": "start"})))["session_id"]
    r = send(svc, {"v": 1, "type": "user", "session_id": sid, "text": "hello"})
    assert "candidates" not in r


def test_synthetic_logs_conform(world):
    for line in (world / "synth" / "dialogues.jsonl").read_text().splitlines()[:20]:
        jsonschema.validate(json.loads(line), DIALOGUE)
