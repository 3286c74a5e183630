"""Envelope codec laws, hub routing and ordering, and the live ws endpoint."""

from __future__ import annotations

import json
import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nudgekit.clock import SimulatedClock
from nudgekit.engine import engine_from_payload
from nudgekit.gateway import (
    ENVELOPE_TYPES,
    Envelope,
    MalformedFrame,
    ProtocolViolation,
    SessionHub,
    UnknownSession,
    UnknownType,
    decode,
    encode,
)

PROFILE = {
    "user_id": "u-test",
    "goal": "maintain a nutritious diet, be active, and overall live a healthy and balanced life",
    "role_traits": "health conscious and think about the long-term consequences over short-term needs",
    "voice_ref": "voice-1",
    "quiet_threshold_ms": 3000,
}


def start_payload(**providers) -> dict:
    providers.setdefault("mode", "mock")
    providers.setdefault("strict", False)
    providers.setdefault("latency", {"stt_ms": 0, "mllm_ms": 0, "tts_ms": 0})
    providers.setdefault("completer_default", "Okay.")
    providers.setdefault("classifier_default", "Output: yes")
    return {"profile": PROFILE, "providers": providers}


def make_hub() -> SessionHub:
    return SessionHub(
        lambda env: engine_from_payload(env.session_id, env.payload, SimulatedClock())
    )


def start_session(hub: SessionHub, session_id: str = "s1", **providers) -> None:
    hub.route(
        Envelope(
            type="session_start",
            session_id=session_id,
            seq=0,
            ts_ms=0,
            payload=start_payload(**providers),
        )
    )


# -- codec --------------------------------------------------------------------------

_json_values = st.recursive(
    st.none()
    | st.booleans()
    | st.integers(min_value=-(10**9), max_value=10**9)
    | st.floats(allow_nan=False, allow_infinity=False)
    | st.text(max_size=20),
    lambda children: st.lists(children, max_size=4)
    | st.dictionaries(st.text(max_size=8), children, max_size=4),
    max_leaves=10,
)

_envelopes = st.builds(
    Envelope,
    type=st.sampled_from(sorted(ENVELOPE_TYPES)),
    session_id=st.text(min_size=1, max_size=12),
    seq=st.integers(0, 10**9),
    ts_ms=st.integers(0, 10**12),
    payload=st.dictionaries(st.text(max_size=8), _json_values, max_size=5),
)


@settings(max_examples=200, deadline=None)
@given(_envelopes)
def test_decode_encode_identity(envelope):
    assert decode(encode(envelope)) == envelope


def test_decode_rejects_missing_payload():
    frame = json.dumps({"type": "frame_batch", "session_id": "s", "seq": 1, "ts_ms": 0})
    with pytest.raises(MalformedFrame):
        decode(frame)


def test_decode_rejects_unknown_type():
    frame = json.dumps(
        {"type": "telepathy", "session_id": "s", "seq": 1, "ts_ms": 0, "payload": {}}
    )
    with pytest.raises(UnknownType):
        decode(frame)


def test_decode_rejects_bad_json():
    with pytest.raises(MalformedFrame):
        decode("{nope")


def test_decode_rejects_extra_keys():
    frame = json.dumps(
        {"type": "silent", "session_id": "s", "seq": 1, "ts_ms": 0, "payload": {}, "x": 1}
    )
    with pytest.raises(MalformedFrame):
        decode(frame)


def test_decode_rejects_bool_seq():
    frame = json.dumps(
        {"type": "silent", "session_id": "s", "seq": True, "ts_ms": 0, "payload": {}}
    )
    with pytest.raises(MalformedFrame):
        decode(frame)


def test_encode_is_stable_and_compact():
    envelope = Envelope(type="silent", session_id="s", seq=1, ts_ms=2, payload={"b": 1, "a": 2})
    assert encode(envelope) == encode(envelope)
    assert encode(envelope) == (
        '{"payload":{"a":2,"b":1},"seq":1,"session_id":"s","ts_ms":2,"type":"silent"}'
    )


# -- hub routing --------------------------------------------------------------------


def test_utterance_routes_to_agent():
    hub = make_hub()
    start_session(hub)
    hub.route(
        Envelope(
            type="user_utterance",
            session_id="s1",
            seq=1,
            ts_ms=0,
            payload={"text": "I am feeling hungry."},
        )
    )
    types = [e.type for e in hub.log_of("s1")]
    assert "user_utterance" in types
    assert "agent_response" in types
    assert types.index("user_utterance") < types.index("agent_response")


def test_scene_inject_runs_classifier_then_agent():
    hub = make_hub()
    start_session(hub)
    hub.route(
        Envelope(
            type="inject",
            session_id="s1",
            seq=1,
            ts_ms=0,
            payload={"kind": "scene", "description": "A snack counter with soda."},
        )
    )
    types = [e.type for e in hub.log_of("s1")]
    expected_order = [
        "scene_observation",
        "context_verdict",
        "debounce_decision",
        "new_info_injected",
        "agent_response",
    ]
    positions = [types.index(t) for t in expected_order]
    assert positions == sorted(positions)


def test_session_stop_resets_debouncer_and_notifies():
    hub = make_hub()
    start_session(hub)
    hub.route(
        Envelope(
            type="inject",
            session_id="s1",
            seq=1,
            ts_ms=0,
            payload={"kind": "scene", "description": "A snack counter."},
        )
    )
    engine = hub.engine_of("s1")
    assert engine.debounce_state.step_count == 1
    hub.route(Envelope(type="session_stop", session_id="s1", seq=2, ts_ms=0, payload={}))
    assert engine.debounce_state.step_count == 0
    assert hub.log_of("s1")[-1].type == "session_stop"
    assert not hub.is_running("s1")


def test_unknown_session_raises():
    hub = make_hub()
    with pytest.raises(UnknownSession):
        hub.route(
            Envelope(type="user_utterance", session_id="ghost", seq=0, ts_ms=0, payload={})
        )


def test_duplicate_session_start_rejected():
    hub = make_hub()
    start_session(hub)
    with pytest.raises(ProtocolViolation):
        start_session(hub)


def test_duplicate_seq_rejected_with_protocol_violation_event():
    hub = make_hub()
    start_session(hub)
    envelope = Envelope(
        type="user_utterance", session_id="s1", seq=1, ts_ms=0, payload={"text": "hi"}
    )
    hub.route(envelope)
    before = len([e for e in hub.log_of("s1") if e.type == "error"])
    hub.route(envelope)  # same seq again
    errors = [e for e in hub.log_of("s1") if e.type == "error"]
    assert len(errors) == before + 1
    assert errors[-1].payload["code"] == "ProtocolViolation"
    # the duplicate produced no second user turn
    assert len([e for e in hub.log_of("s1") if e.type == "user_utterance"]) == 1


def test_outbound_only_type_rejected_inbound():
    hub = make_hub()
    start_session(hub)
    hub.route(Envelope(type="agent_response", session_id="s1", seq=5, ts_ms=0, payload={}))
    errors = [e for e in hub.log_of("s1") if e.type == "error"]
    assert errors and "not accepted inbound" in errors[-1].payload["message"]


def test_outbound_seq_strictly_increasing():
    hub = make_hub()
    start_session(hub)
    for i in range(3):
        hub.route(
            Envelope(
                type="user_utterance",
                session_id="s1",
                seq=i + 1,
                ts_ms=0,
                payload={"text": f"line {i}"},
            )
        )
    seqs = [e.seq for e in hub.log_of("s1")]
    assert seqs == list(range(len(seqs)))


def test_subscriber_gets_backlog_then_live_events():
    hub = make_hub()
    start_session(hub)
    hub.route(
        Envelope(
            type="user_utterance", session_id="s1", seq=1, ts_ms=0, payload={"text": "one"}
        )
    )
    seen: list[Envelope] = []
    hub.subscribe("s1", seen.append)
    backlog_len = len(seen)
    assert [e.type for e in seen] == [e.type for e in hub.log_of("s1")]
    hub.route(
        Envelope(
            type="user_utterance", session_id="s1", seq=2, ts_ms=0, payload={"text": "two"}
        )
    )
    assert len(seen) > backlog_len
    assert [e.seq for e in seen] == list(range(len(seen)))


def test_fifo_preserved_under_eight_concurrent_sessions():
    hub = make_hub()
    per_session = 25
    session_ids = [f"s{i}" for i in range(8)]
    for session_id in session_ids:
        start_session(hub, session_id)

    def pump(session_id: str) -> None:
        for i in range(per_session):
            hub.route(
                Envelope(
                    type="user_utterance",
                    session_id=session_id,
                    seq=i + 1,
                    ts_ms=0,
                    payload={"text": f"{session_id} line {i}"},
                )
            )

    threads = [threading.Thread(target=pump, args=(sid,)) for sid in session_ids]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    for session_id in session_ids:
        texts = [
            e.payload["text"] for e in hub.log_of(session_id) if e.type == "user_utterance"
        ]
        assert texts == [f"{session_id} line {i}" for i in range(per_session)]
        seqs = [e.seq for e in hub.log_of(session_id)]
        assert seqs == list(range(len(seqs)))


# -- websocket endpoint --------------------------------------------------------------


@pytest.fixture()
def ws_client():
    from starlette.testclient import TestClient

    from nudgekit.server import create_app

    with TestClient(create_app()) as client:
        yield client


def _recv_until(ws, wanted_type: str, limit: int = 50) -> dict:
    for _ in range(limit):
        message = json.loads(ws.receive_text())
        if message["type"] == wanted_type:
            return message
    raise AssertionError(f"never saw a {wanted_type} frame")


def test_ws_session_round_trip(ws_client):
    with ws_client.websocket_connect("/ws") as ws:
        ws.send_text(
            encode(
                Envelope(
                    type="session_start",
                    session_id="live-1",
                    seq=0,
                    ts_ms=0,
                    payload=start_payload(),
                )
            )
        )
        assert _recv_until(ws, "session_start")["session_id"] == "live-1"
        ws.send_text(
            encode(
                Envelope(
                    type="user_utterance",
                    session_id="live-1",
                    seq=1,
                    ts_ms=0,
                    payload={"text": "I am feeling hungry."},
                )
            )
        )
        assert _recv_until(ws, "user_utterance")["payload"]["text"] == "I am feeling hungry."
        assert _recv_until(ws, "agent_response")["payload"]["text"] == "Okay."


def test_ws_malformed_frame_gets_error_reply(ws_client):
    with ws_client.websocket_connect("/ws") as ws:
        ws.send_text("{broken")
        message = json.loads(ws.receive_text())
        assert message["type"] == "error"
        assert message["payload"]["code"] == "MalformedFrame"


def test_ws_subscribe_unknown_session_error_banner(ws_client):
    with ws_client.websocket_connect("/ws") as ws:
        ws.send_text(json.dumps({"type": "subscribe", "session_id": "ghost"}))
        message = json.loads(ws.receive_text())
        assert message["type"] == "error"
        assert message["payload"]["code"] == "UnknownSession"


def test_ws_observer_rebuilds_from_backlog(ws_client):
    with ws_client.websocket_connect("/ws") as starter:
        starter.send_text(
            encode(
                Envelope(
                    type="session_start",
                    session_id="live-2",
                    seq=0,
                    ts_ms=0,
                    payload=start_payload(),
                )
            )
        )
        _recv_until(starter, "session_start")
        starter.send_text(
            encode(
                Envelope(
                    type="user_utterance",
                    session_id="live-2",
                    seq=1,
                    ts_ms=0,
                    payload={"text": "backlog line"},
                )
            )
        )
        _recv_until(starter, "agent_response")
        with ws_client.websocket_connect("/ws") as observer:
            observer.send_text(json.dumps({"type": "subscribe", "session_id": "live-2"}))
            assert _recv_until(observer, "user_utterance")["payload"]["text"] == "backlog line"
            assert _recv_until(observer, "agent_response")["payload"]["text"] == "Okay."
