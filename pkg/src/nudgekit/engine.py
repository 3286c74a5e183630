"""Per-session orchestration: frames in, gated nudges out.

The engine is the single consumer behind one session. It owns the frame
batcher, observation sequencing, classification, the debounce gate, and
the dialogue agent, and reports everything that happens as typed session
events through an emit callback (the gateway hub turns those into
envelopes). All blocking work is provider calls; handlers run serially.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .clock import Clock
from .context_classifier import Verdict, classify
from .providers import ProviderLatencyProfile, ScriptedReply, mock_bundle
from .user_model import profile_from_dict
from .debouncer import DebounceConfig, DebounceState, reset as debounce_reset, step as debounce_step
from .frame_pipeline import CameraConfig, FilterConfig, FrameBatcher, FrameSample
from .perception import (
    DEFAULT_DESCRIBE_DEADLINE_MS,
    ObservationSequencer,
    SceneObservation,
    describe_batch,
)
from .proactive_agent import AgentConfig, NudgeAgent, Role, nudge_trigger_for
from .providers import ProviderBundle, ProviderError
from .tracing import IncompleteTrace, Tracer, end_to_end_latency
from .user_model import UserProfile, render_persona_prompt


@dataclass(frozen=True)
class EngineConfig:
    camera: CameraConfig = field(default_factory=CameraConfig)
    filters: FilterConfig = field(default_factory=FilterConfig)
    debounce: DebounceConfig = field(default_factory=DebounceConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    describe_deadline_ms: int = DEFAULT_DESCRIBE_DEADLINE_MS
    classify_deadline_ms: int = 2000
    stt_deadline_ms: int = 2000


class SessionEngine:
    """Wires one session's pipeline stages together."""

    def __init__(
        self,
        session_id: str,
        profile: UserProfile,
        providers: ProviderBundle,
        clock: Clock,
        *,
        config: EngineConfig | None = None,
        tracer: Tracer | None = None,
    ) -> None:
        self.session_id = session_id
        self.profile = profile
        self.providers = providers
        self.clock = clock
        self.config = config or EngineConfig()
        self.tracer = tracer if tracer is not None else Tracer()
        self.tracer.set_on_span(self._on_span)
        self.persona = render_persona_prompt(profile)
        self.batcher = FrameBatcher(self.config.camera, self.config.filters)
        self.sequencer = ObservationSequencer()
        self.debounce_state = DebounceState()
        self.agent = NudgeAgent(
            profile,
            self.persona,
            completer=providers.completer,
            synthesizer=providers.tts,
            clock=clock,
            config=self.config.agent,
            emit=self._emit_event,
        )
        self.stopped = False
        self._emit_sink = lambda event_type, payload: None
        self._utterance_seq = 0
        self._frames_pushed = 0
        self._frames_kept = 0
        self._frames_dropped = 0
        self._batch_count = 0
        self._observation_count = 0
        self._verdict_counts = {v.value: 0 for v in Verdict}
        self._silent_count = 0

    def set_emitter(self, emit) -> None:
        """Install the hub's envelope emitter: fn(event_type, payload)."""
        self._emit_sink = emit

    def _emit_event(self, event_type: str, payload: dict) -> None:
        if event_type == "silent":
            self._silent_count += 1
        self._emit_sink(event_type, payload)

    def _on_span(self, span) -> None:
        self._emit_event("trace", span.to_dict())

    # -- lifecycle ------------------------------------------------------------

    def start(self) -> None:
        self._emit_event(
            "session_start",
            {"profile": self.profile.to_dict(), "ts_ms": self.clock.now_ms()},
        )

    def stop(self) -> None:
        if self.stopped:
            return
        self.stopped = True
        self.agent.abandon_pending("session_stopped")
        debounce_reset(self.debounce_state)
        self._emit_event("session_stop", {"ts_ms": self.clock.now_ms()})

    def next_wakeup_ms(self) -> int | None:
        return self.agent.next_wakeup_ms()

    # -- event handlers --------------------------------------------------------

    def handle_frame(self, frame: FrameSample) -> None:
        self._frames_pushed += 1
        batch = self.batcher.push(frame)
        if batch is None:
            return
        self._batch_count += 1
        self._frames_kept += len(batch.kept_frame_ids)
        self._frames_dropped += len(batch.source_frame_ids) - len(batch.kept_frame_ids)
        self._emit_event(
            "frame_batch",
            {
                "batch_id": batch.batch_id,
                "source_frame_ids": list(batch.source_frame_ids),
                "kept_frame_ids": list(batch.kept_frame_ids),
                "frame_refs": [f"frame:{i}" for i in batch.kept_frame_ids],
            },
        )
        if not batch.kept_frame_ids:
            self._release(self.sequencer.skip(batch.batch_id))
            return
        try:
            observation = describe_batch(
                batch,
                self.providers.describer,
                clock=self.clock,
                deadline_ms=self.config.describe_deadline_ms,
            )
        except ProviderError as exc:
            self._emit_error(exc, correlation_id=f"batch-{batch.batch_id}")
            self._release(self.sequencer.skip(batch.batch_id))
            return
        assert observation is not None  # kept set checked above
        self._release(self.sequencer.push(observation))

    def handle_utterance(self, payload: dict) -> None:
        correlation_id = f"utt-{self._utterance_seq}"
        self._utterance_seq += 1
        event = {"text": payload.get("text", ""), "audio_ref": payload.get("audio_ref")}
        try:
            text = self.providers.stt.transcribe(
                event, deadline_ms=self.config.stt_deadline_ms, correlation_id=correlation_id
            )
        except ProviderError as exc:
            self._emit_error(exc, correlation_id=correlation_id)
            return
        if not text.strip():
            self.emit_error(
                "EmptyUtterance", "utterance rejected: no speakable text", correlation_id
            )
            return
        self._emit_event(
            "user_utterance",
            {"text": text, "ts_ms": self.clock.now_ms(), "correlation_id": correlation_id},
        )
        self.agent.on_user_utterance(text, correlation_id=correlation_id)

    def handle_inject(self, payload: dict) -> None:
        kind = payload.get("kind")
        if kind == "utterance":
            self.handle_utterance(payload)
        elif kind == "scene":
            self._inject_scene(str(payload.get("description", "")))
        elif kind == "other_speaker_toggle":
            active = bool(payload.get("active"))
            self.agent.note_other_speaker(active)
            self._emit_event(
                "inject",
                {"kind": "other_speaker_toggle", "active": active, "ts_ms": self.clock.now_ms()},
            )
        else:
            self.emit_error("UnknownInjectKind", f"unsupported inject kind: {kind!r}", "")

    def handle_tick(self) -> None:
        self.agent.on_tick(self.clock.now_ms())

    def handle_other_speaker(self, active: bool) -> None:
        self.handle_inject({"kind": "other_speaker_toggle", "active": active})

    # -- internals --------------------------------------------------------------

    def _inject_scene(self, description: str) -> None:
        if not description.strip():
            self.emit_error("EmptyObservation", "scene inject with no description", "")
            return
        observation = SceneObservation(
            batch_id=self.batcher.reserve_batch_id(),
            ts_ms=self.clock.now_ms(),
            description=description,
            kept_frame_ids=(),
        )
        self._release(self.sequencer.push(observation))

    def _release(self, observations: list[SceneObservation]) -> None:
        for observation in observations:
            self._observation_count += 1
            self._emit_event(
                "scene_observation",
                {
                    "batch_id": observation.batch_id,
                    "ts_ms": observation.ts_ms,
                    "description": observation.description,
                    "kept_frame_ids": list(observation.kept_frame_ids),
                },
            )
            self._classify_and_gate(observation)

    def _classify_and_gate(self, observation: SceneObservation) -> None:
        turns = tuple(
            (t.role.value, t.text)
            for t in self.agent.history
            if t.role in (Role.USER, Role.ASSISTANT)
        )
        state = classify(
            observation,
            goal=f"The user's goal is to {self.profile.goal}.",
            turns=turns,
            provider=self.providers.classifier,
            deadline_ms=self.config.classify_deadline_ms,
        )
        self._verdict_counts[state.verdict.value] += 1
        self._emit_event(
            "context_verdict",
            {
                "batch_id": state.batch_id,
                "verdict": state.verdict.value,
                "observation_ref": state.observation_ref,
            },
        )
        decision = debounce_step(self.debounce_state, state.verdict, self.config.debounce)
        self._emit_event(
            "debounce_decision", decision.to_payload() | {"batch_id": state.batch_id}
        )
        turn = self.agent.inject_context(observation, decision)
        if turn is None:
            return
        self._emit_event(
            "new_info_injected",
            {"text": turn.text, "ts_ms": turn.ts_ms, "batch_id": observation.batch_id},
        )
        self.agent.on_context_trigger(
            nudge_trigger_for(decision.reason), correlation_id=observation.ref
        )

    def _emit_error(self, exc: Exception, correlation_id: str) -> None:
        self.emit_error(type(exc).__name__, str(exc), correlation_id)

    def emit_error(self, code: str, message: str, correlation_id: str = "") -> None:
        self._emit_event(
            "error",
            {
                "code": code,
                "message": message,
                "ts_ms": self.clock.now_ms(),
                "correlation_id": correlation_id,
            },
        )

    # -- metrics ------------------------------------------------------------------

    def metrics(self) -> dict:
        """Deterministic session counters plus end-to-end latency summary."""
        reasons: dict[str, int] = {}
        for response in self.agent.responses:
            reasons[response.trigger_reason.value] = (
                reasons.get(response.trigger_reason.value, 0) + 1
            )
        totals: list[int] = []
        budget_ok = True
        correlations = sorted(
            {s.correlation_id for s in self.tracer.spans if s.correlation_id.startswith("utt-")},
            key=lambda c: int(c.split("-")[1]),
        )
        for correlation_id in correlations:
            try:
                report = end_to_end_latency(self.tracer.for_correlation(correlation_id))
            except IncompleteTrace:
                continue
            totals.append(report.total_ms)
            budget_ok = budget_ok and report.budget_ok
        return {
            "frames_pushed": self._frames_pushed,
            "frames_kept": self._frames_kept,
            "frames_dropped": self._frames_dropped,
            "frames_unbatched": self.batcher.pending_count,
            "batch_count": self._batch_count,
            "observation_count": self._observation_count,
            "verdicts": dict(self._verdict_counts),
            "nudge_count": len(self.agent.responses),
            "trigger_reasons": reasons,
            "silent_count": self._silent_count,
            "interaction_count": len(totals),
            "e2e_mean_ms": (sum(totals) / len(totals)) if totals else None,
            "e2e_min_ms": min(totals) if totals else None,
            "e2e_max_ms": max(totals) if totals else None,
            "e2e_budget_ok": budget_ok if totals else None,
        }


def engine_config_from_dict(doc: dict) -> EngineConfig:
    """Build an EngineConfig from the optional ``config`` section of a
    session_start payload or scenario script."""
    camera_doc = dict(doc.get("camera", {}))
    if "resolution" in camera_doc:
        camera_doc["resolution"] = tuple(camera_doc["resolution"])
    return EngineConfig(
        camera=CameraConfig(**camera_doc),
        filters=FilterConfig(**doc.get("filters", {})),
        debounce=DebounceConfig(**doc.get("debounce", {})),
        agent=AgentConfig(**doc.get("agent", {})),
        describe_deadline_ms=doc.get("describe_deadline_ms", DEFAULT_DESCRIBE_DEADLINE_MS),
        classify_deadline_ms=doc.get("classify_deadline_ms", 2000),
        stt_deadline_ms=doc.get("stt_deadline_ms", 2000),
    )


def _scripted_replies(entries: list) -> list[ScriptedReply]:
    replies = []
    for entry in entries:
        if isinstance(entry, str):
            replies.append(ScriptedReply(reply=entry))
        else:
            replies.append(ScriptedReply(reply=entry["reply"], pattern=entry.get("pattern")))
    return replies


def engine_from_payload(session_id: str, payload: dict, clock: Clock) -> SessionEngine:
    """Construct a fully mocked session engine from a session_start payload.

    Payload schema: {"profile": {...}, "providers": {"mode": "mock",
    "latency": {...}, "scripts": {stt|describer|completer|classifier: [...]},
    "strict": bool, "completer_default"/"classifier_default": str},
    "config": {...}}. Live provider modes are intentionally unsupported.
    """
    profile = profile_from_dict(payload["profile"])
    providers_doc = dict(payload.get("providers", {}))
    mode = providers_doc.get("mode", "mock")
    if mode != "mock":
        raise ValueError(f"unsupported provider mode: {mode!r} (only 'mock' ships)")
    latency = ProviderLatencyProfile(**providers_doc.get("latency", {}))
    scripts = providers_doc.get("scripts", {})
    tracer = Tracer()
    bundle = mock_bundle(
        clock=clock,
        session_id=session_id,
        tracer=tracer,
        profile=latency,
        stt_replies=_scripted_replies(scripts.get("stt", [])),
        describer_replies=_scripted_replies(scripts.get("describer", [])),
        completer_replies=_scripted_replies(scripts.get("completer", [])),
        classifier_replies=_scripted_replies(scripts.get("classifier", [])),
        strict=bool(providers_doc.get("strict", True)),
        completer_default=providers_doc.get("completer_default"),
        classifier_default=providers_doc.get("classifier_default"),
        describer_default=providers_doc.get("describer_default"),
    )
    config = engine_config_from_dict(payload.get("config", {}))
    return SessionEngine(
        session_id, profile, bundle, clock, config=config, tracer=tracer
    )
