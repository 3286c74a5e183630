"""Websocket hub: envelope codec, per-session routing, and the live server.

All traffic is JSON text frames carrying one :class:`Envelope`. Inbound
envelopes are requests from clients (or the scenario runner); the session
engine re-emits everything that actually happened as an ordered outbound
event stream, which is both the session log and what observers receive.
Per-session processing is serialized; independent sessions proceed in
parallel.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from typing import Callable

from .engine import SessionEngine
from .errors import NudgeKitError
from .frame_pipeline import FrameSample

ENVELOPE_TYPES = frozenset(
    {
        "session_start",
        "session_stop",
        "frame_batch",
        "scene_observation",
        "context_verdict",
        "debounce_decision",
        "new_info_injected",
        "user_utterance",
        "agent_response",
        "silent",
        "trace",
        "error",
        "inject",
    }
)

# Types a client may send; the rest only ever appear in the outbound stream.
INBOUND_TYPES = frozenset({"session_start", "session_stop", "user_utterance", "inject"})

_ENVELOPE_KEYS = frozenset({"type", "session_id", "seq", "ts_ms", "payload"})


class UnknownType(NudgeKitError):
    """Envelope type outside the registered set."""


class MalformedFrame(NudgeKitError):
    """Text frame that does not parse into a valid envelope."""


class UnknownSession(NudgeKitError):
    """Envelope for a session that was never started."""


class ProtocolViolation(NudgeKitError):
    """Sequencing or lifecycle rule broken by a client."""


@dataclass(frozen=True)
class Envelope:
    type: str
    session_id: str
    seq: int
    ts_ms: int
    payload: dict

    def __post_init__(self) -> None:
        if self.type not in ENVELOPE_TYPES:
            raise UnknownType(f"unregistered envelope type: {self.type!r}")


def encode(envelope: Envelope) -> str:
    """Envelope -> UTF-8 JSON text frame; stable key order for golden logs."""
    return json.dumps(
        {
            "type": envelope.type,
            "session_id": envelope.session_id,
            "seq": envelope.seq,
            "ts_ms": envelope.ts_ms,
            "payload": envelope.payload,
        },
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )


def decode(text: str) -> Envelope:
    """Inverse of :func:`encode`; rejects anything structurally off."""
    try:
        raw = json.loads(text)
    except (ValueError, TypeError) as exc:
        raise MalformedFrame(f"frame is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise MalformedFrame("frame must be a JSON object")
    if set(raw) != _ENVELOPE_KEYS:
        raise MalformedFrame(
            f"frame keys {sorted(raw)} do not match {sorted(_ENVELOPE_KEYS)}"
        )
    type_ = raw["type"]
    if not isinstance(type_, str):
        raise MalformedFrame("type must be a string")
    if type_ not in ENVELOPE_TYPES:
        raise UnknownType(f"unregistered envelope type: {type_!r}")
    session_id = raw["session_id"]
    if not isinstance(session_id, str) or not session_id:
        raise MalformedFrame("session_id must be a non-empty string")
    seq = raw["seq"]
    ts_ms = raw["ts_ms"]
    if isinstance(seq, bool) or not isinstance(seq, int) or seq < 0:
        raise MalformedFrame("seq must be a non-negative integer")
    if isinstance(ts_ms, bool) or not isinstance(ts_ms, int):
        raise MalformedFrame("ts_ms must be an integer")
    payload = raw["payload"]
    if not isinstance(payload, dict):
        raise MalformedFrame("payload must be a JSON object")
    return Envelope(type=type_, session_id=session_id, seq=seq, ts_ms=ts_ms, payload=payload)


Listener = Callable[[Envelope], None]
EngineFactory = Callable[[Envelope], SessionEngine]


class _Slot:
    def __init__(self, engine: SessionEngine) -> None:
        self.engine = engine
        self.lock = threading.RLock()
        self.log: list[Envelope] = []
        self.observers: list[Listener] = []
        self.last_inbound_seq: int | None = None
        self.out_seq = 0


class SessionHub:
    """Routes inbound envelopes to session engines and fans the outbound
    event stream out to subscribed observers, FIFO per session."""

    def __init__(self, engine_factory: EngineFactory) -> None:
        self._engine_factory = engine_factory
        self._sessions: dict[str, _Slot] = {}
        self._registry_lock = threading.Lock()

    # -- session lifecycle ----------------------------------------------------

    def _slot(self, session_id: str) -> _Slot:
        with self._registry_lock:
            slot = self._sessions.get(session_id)
        if slot is None:
            raise UnknownSession(f"no such session: {session_id!r}")
        return slot

    def session_ids(self) -> list[str]:
        with self._registry_lock:
            return sorted(self._sessions)

    def is_running(self, session_id: str) -> bool:
        try:
            return not self._slot(session_id).engine.stopped
        except UnknownSession:
            return False

    def log_of(self, session_id: str) -> list[Envelope]:
        slot = self._slot(session_id)
        with slot.lock:
            return list(slot.log)

    def engine_of(self, session_id: str) -> SessionEngine:
        return self._slot(session_id).engine

    # -- routing ----------------------------------------------------------------

    def route(self, envelope: Envelope) -> None:
        """Deliver one inbound envelope or record exactly one error event."""
        if envelope.type == "session_start":
            self._start_session(envelope)
            return
        slot = self._slot(envelope.session_id)
        with slot.lock:
            if not self._accept_seq(slot, envelope):
                return
            if envelope.type not in INBOUND_TYPES:
                self._error_event(
                    slot,
                    envelope.session_id,
                    "ProtocolViolation",
                    f"type {envelope.type!r} is not accepted inbound",
                )
                return
            if slot.engine.stopped:
                self._error_event(
                    slot, envelope.session_id, "ProtocolViolation", "session already stopped"
                )
                return
            if envelope.type == "session_stop":
                slot.engine.stop()
            elif envelope.type == "user_utterance":
                slot.engine.handle_utterance(envelope.payload)
            elif envelope.type == "inject":
                slot.engine.handle_inject(envelope.payload)

    def _start_session(self, envelope: Envelope) -> None:
        with self._registry_lock:
            if envelope.session_id in self._sessions:
                raise ProtocolViolation(f"session {envelope.session_id!r} already started")
            engine = self._engine_factory(envelope)
            slot = _Slot(engine)
            slot.last_inbound_seq = envelope.seq
            self._sessions[envelope.session_id] = slot
        engine.set_emitter(self._emitter_for(envelope.session_id, slot))
        with slot.lock:
            engine.start()

    def _emitter_for(self, session_id: str, slot: _Slot) -> Callable[[str, dict], None]:
        def emit(event_type: str, payload: dict) -> None:
            out = Envelope(
                type=event_type,
                session_id=session_id,
                seq=slot.out_seq,
                ts_ms=slot.engine.clock.now_ms(),
                payload=payload,
            )
            slot.out_seq += 1
            slot.log.append(out)
            for observer in list(slot.observers):
                observer(out)

        return emit

    def _accept_seq(self, slot: _Slot, envelope: Envelope) -> bool:
        if slot.last_inbound_seq is not None and envelope.seq <= slot.last_inbound_seq:
            self._error_event(
                slot,
                envelope.session_id,
                "ProtocolViolation",
                f"inbound seq {envelope.seq} not after {slot.last_inbound_seq}",
            )
            return False
        slot.last_inbound_seq = envelope.seq
        return True

    def _error_event(self, slot: _Slot, session_id: str, code: str, message: str) -> None:
        slot.engine.emit_error(code, message)

    # -- frames (in-process producers only; pixels never cross the wire) --------

    def push_frame(self, session_id: str, frame: FrameSample) -> None:
        slot = self._slot(session_id)
        with slot.lock:
            if not slot.engine.stopped:
                slot.engine.handle_frame(frame)

    def tick(self, session_id: str) -> None:
        slot = self._slot(session_id)
        with slot.lock:
            if not slot.engine.stopped:
                slot.engine.handle_tick()

    # -- observers ---------------------------------------------------------------

    def subscribe(self, session_id: str, listener: Listener) -> None:
        """Attach an observer; it receives the backlog, then live events."""
        slot = self._slot(session_id)
        with slot.lock:
            for envelope in slot.log:
                listener(envelope)
            slot.observers.append(listener)

    def unsubscribe(self, session_id: str, listener: Listener) -> None:
        try:
            slot = self._slot(session_id)
        except UnknownSession:
            return
        with slot.lock:
            if listener in slot.observers:
                slot.observers.remove(listener)

    def stop_session(self, session_id: str) -> None:
        try:
            slot = self._slot(session_id)
        except UnknownSession:
            return
        with slot.lock:
            slot.engine.stop()
