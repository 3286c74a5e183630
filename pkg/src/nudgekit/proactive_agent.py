"""The ideal-self dialogue agent: responds to user speech, absorbs gated
context injections, and decides when (not) to speak.

Speak-vs-silent is delegated to the language provider through a reserved
sentinel completion ("[SILENT]"); a dedicated system instruction documents
it to the model. Context-triggered responses are additionally gated on the
user being quiet: if the user (or someone else) is talking, the response is
deferred and re-checked on a periodic tick until a hard cap, after which
the injection is abandoned as stale.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable

from .clock import Clock
from .debouncer import DebounceDecision, TriggerReason
from .perception import SceneObservation
from .providers import AudioHandle, ProviderError, SpeechSynthesizer, TextCompleter
from .user_model import PersonaPrompt, UserProfile

logger = logging.getLogger(__name__)

SILENCE_SENTINEL = "[SILENT]"
SILENCE_INSTRUCTION = (
    'If no response is warranted right now, reply with exactly "[SILENT]".'
)
NEW_INFO_PREFIX = "[NEW INFO] "


class Role(str, Enum):
    USER = "user"
    ASSISTANT = "assistant"
    SYSTEM = "system"


class NudgeTrigger(str, Enum):
    CONTEXT_CHANGE = "context_change"
    INTERVAL = "interval"
    USER_SPEECH = "user_speech"
    SCRIPTED = "scripted"


def nudge_trigger_for(reason: TriggerReason) -> NudgeTrigger:
    """Map a debounce trigger reason onto the response trigger taxonomy."""
    if reason is TriggerReason.STATE_CHANGE:
        return NudgeTrigger.CONTEXT_CHANGE
    if reason is TriggerReason.INTERVAL:
        return NudgeTrigger.INTERVAL
    raise ValueError(f"{reason} is not a triggering reason")


@dataclass(frozen=True)
class ConversationTurn:
    role: Role
    text: str
    ts_ms: int


@dataclass(frozen=True)
class NudgeResponse:
    text: str
    ts_ms: int
    trigger_reason: NudgeTrigger
    audio_ref: AudioHandle | None = None

    def __post_init__(self) -> None:
        if not self.text or self.text.strip() == SILENCE_SENTINEL:
            raise ValueError("a nudge must carry speakable text")


@dataclass
class SpeechActivity:
    """What the transcript source tells us about who is talking."""

    last_user_speech_ms: int | None = None
    other_speaker_active: bool = False

    def note_user_speech(self, ts_ms: int) -> None:
        if self.last_user_speech_ms is not None and ts_ms < self.last_user_speech_ms:
            raise ValueError("last_user_speech_ms must be monotone non-decreasing")
        self.last_user_speech_ms = ts_ms


def quiet_check(activity: SpeechActivity, now_ms: int, profile: UserProfile) -> bool:
    """True when the user has been quiet long enough and nobody else talks."""
    if activity.other_speaker_active:
        return False
    if activity.last_user_speech_ms is None:
        return True
    return now_ms - activity.last_user_speech_ms >= profile.quiet_threshold_ms


@dataclass(frozen=True)
class AgentConfig:
    deferral_cap_ms: int = 30_000
    tick_interval_ms: int = 500
    completion_deadline_ms: int = 2000
    tts_deadline_ms: int = 2000


@dataclass
class _PendingInjection:
    injected_at_ms: int
    deadline_ms: int
    next_tick_ms: int
    trigger_reason: NudgeTrigger
    correlation_id: str


EmitFn = Callable[[str, dict], None]


class NudgeAgent:
    """Per-session conversation loop. Single consumer; providers are the only
    blocking calls and at most one completion is in flight at a time."""

    def __init__(
        self,
        profile: UserProfile,
        persona: PersonaPrompt,
        *,
        completer: TextCompleter,
        synthesizer: SpeechSynthesizer,
        clock: Clock,
        config: AgentConfig | None = None,
        emit: EmitFn | None = None,
    ) -> None:
        self.profile = profile
        self.persona = persona
        self.config = config or AgentConfig()
        self.activity = SpeechActivity()
        self.history: list[ConversationTurn] = []
        self.responses: list[NudgeResponse] = []
        self._completer = completer
        self._synthesizer = synthesizer
        self._clock = clock
        self._emit = emit or (lambda event_type, payload: None)
        self._pending: _PendingInjection | None = None

    # -- conversation state -------------------------------------------------

    def _append(self, role: Role, text: str) -> ConversationTurn:
        # History must be strictly time-ordered; bump 1 ms on a clock collision.
        ts = self._clock.now_ms()
        if self.history and ts <= self.history[-1].ts_ms:
            ts = self.history[-1].ts_ms + 1
        turn = ConversationTurn(role=role, text=text, ts_ms=ts)
        self.history.append(turn)
        return turn

    def _messages(self) -> list[dict]:
        messages = [
            {"role": "system", "content": self.persona.text},
            {"role": "system", "content": SILENCE_INSTRUCTION},
        ]
        messages.extend({"role": t.role.value, "content": t.text} for t in self.history)
        return messages

    def quiet_check(self, now_ms: int) -> bool:
        return quiet_check(self.activity, now_ms, self.profile)

    def note_other_speaker(self, active: bool) -> None:
        self.activity.other_speaker_active = active

    @property
    def pending_injection(self) -> bool:
        return self._pending is not None

    def next_wakeup_ms(self) -> int | None:
        """When the deferral tick should next run; None when nothing pends."""
        return self._pending.next_tick_ms if self._pending else None

    # -- pipeline entry points ----------------------------------------------

    def inject_context(
        self, observation: SceneObservation, decision: DebounceDecision
    ) -> ConversationTurn | None:
        """Append the observation as a [NEW INFO] system turn when gated in."""
        if not decision.trigger:
            return None
        return self._append(Role.SYSTEM, NEW_INFO_PREFIX + observation.description)

    def on_user_utterance(self, utterance: str, *, correlation_id: str = "") -> NudgeResponse | None:
        """Record user speech and ask the persona for a reply (or silence)."""
        if not utterance.strip():
            return None
        turn = self._append(Role.USER, utterance)
        self.activity.note_user_speech(turn.ts_ms)
        return self._try_respond(NudgeTrigger.USER_SPEECH, correlation_id)

    def on_context_trigger(
        self, reason: NudgeTrigger, *, correlation_id: str = ""
    ) -> NudgeResponse | None:
        """React to a just-injected [NEW INFO] turn, deferring while not quiet.

        While a deferral is already pending, later triggers fold into it:
        their turns are in history, the freshest reason wins, and the
        abandonment deadline stays anchored at the first injection.
        """
        now = self._clock.now_ms()
        if self.quiet_check(now):
            self._pending = None
            return self._try_respond(reason, correlation_id)
        if self._pending is None:
            self._pending = _PendingInjection(
                injected_at_ms=now,
                deadline_ms=now + self.config.deferral_cap_ms,
                next_tick_ms=min(
                    now + self.config.tick_interval_ms, now + self.config.deferral_cap_ms
                ),
                trigger_reason=reason,
                correlation_id=correlation_id,
            )
        else:
            self._pending.trigger_reason = reason
            self._pending.correlation_id = correlation_id
        return None

    def abandon_pending(self, reason: str) -> None:
        """Drop the pending deferral, recording a silent event with ``reason``."""
        pending = self._pending
        if pending is None:
            return
        self._pending = None
        self._emit(
            "silent",
            {
                "ts_ms": self._clock.now_ms(),
                "reason": reason,
                "correlation_id": pending.correlation_id,
            },
        )

    def on_tick(self, now_ms: int | None = None) -> NudgeResponse | None:
        """Re-check a pending deferral: fire when quiet, abandon at the cap."""
        pending = self._pending
        if pending is None:
            return None
        now = self._clock.now_ms() if now_ms is None else now_ms
        if now >= pending.deadline_ms:
            self.abandon_pending("deferral_expired")
            return None
        if self.quiet_check(now):
            self._pending = None
            return self._try_respond(pending.trigger_reason, pending.correlation_id)
        pending.next_tick_ms = min(now + self.config.tick_interval_ms, pending.deadline_ms)
        return None

    # -- completion ----------------------------------------------------------

    def _try_respond(self, reason: NudgeTrigger, correlation_id: str) -> NudgeResponse | None:
        try:
            return self._respond(reason, correlation_id)
        except ProviderError as exc:
            logger.warning("completion failed (%s): %s", correlation_id, exc)
            self._emit(
                "error",
                {
                    "code": type(exc).__name__,
                    "message": str(exc),
                    "ts_ms": self._clock.now_ms(),
                    "correlation_id": correlation_id,
                },
            )
            return None

    def _respond(self, reason: NudgeTrigger, correlation_id: str) -> NudgeResponse | None:
        reply = self._completer.complete(
            self._messages(),
            deadline_ms=self.config.completion_deadline_ms,
            correlation_id=correlation_id,
        )
        if reply.strip() == SILENCE_SENTINEL:
            self._emit(
                "silent",
                {
                    "ts_ms": self._clock.now_ms(),
                    "reason": "model_declined",
                    "correlation_id": correlation_id,
                },
            )
            return None
        audio = self._synthesizer.synthesize(
            reply,
            self.profile.voice_ref,
            deadline_ms=self.config.tts_deadline_ms,
            correlation_id=correlation_id,
        )
        turn = self._append(Role.ASSISTANT, reply)
        response = NudgeResponse(
            text=reply, ts_ms=turn.ts_ms, trigger_reason=reason, audio_ref=audio
        )
        self.responses.append(response)
        self._emit(
            "agent_response",
            {
                "text": response.text,
                "trigger_reason": response.trigger_reason.value,
                "ts_ms": response.ts_ms,
                "audio_ref": audio.to_dict(),
                "correlation_id": correlation_id,
            },
        )
        return response
