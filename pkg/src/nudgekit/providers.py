"""Provider interfaces (speech-to-text, vision, completion, synthesis) and
deterministic scripted mocks.

The mocks carry a configurable latency profile: each call advances the
session clock by its component latency and records one trace span, so
latency measurements under the simulated clock are exact. Live HTTP
implementations would satisfy the same protocols but are deliberately not
shipped; tests and the bundled scenarios run entirely against mocks.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass, field
from typing import Protocol, Sequence, runtime_checkable

from .clock import Clock
from .errors import NudgeKitError
from .tracing import Tracer, TraceSpan

DEFAULT_DEADLINE_MS = 2000


class ProviderError(NudgeKitError):
    """The provider failed to produce a usable reply."""


class ProviderTimeout(ProviderError):
    """The call's latency exceeded the caller's deadline."""


class ScriptExhausted(ProviderError):
    """A strict scripted mock ran out of queued replies."""


class ScriptMismatch(ProviderError):
    """A scripted reply carried a pattern that the actual call did not match."""


@dataclass(frozen=True)
class ProviderLatencyProfile:
    """Average per-component latencies injected by the mocks, in ms."""

    stt_ms: int = 100
    mllm_ms: int = 450
    tts_ms: int = 370

    def __post_init__(self) -> None:
        for name in ("stt_ms", "mllm_ms", "tts_ms"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class AudioHandle:
    """Opaque reference to synthesized audio; no sample data in scope."""

    ref: str
    duration_ms: int

    def to_dict(self) -> dict:
        return {"ref": self.ref, "duration_ms": self.duration_ms}


Message = dict  # {"role": ..., "content": ...}


@runtime_checkable
class SpeechToText(Protocol):
    def transcribe(
        self, event: dict, *, deadline_ms: int = DEFAULT_DEADLINE_MS, correlation_id: str = ""
    ) -> str: ...


@runtime_checkable
class VisionDescriber(Protocol):
    def describe(
        self,
        frames: Sequence,
        prompt: str,
        *,
        deadline_ms: int = DEFAULT_DEADLINE_MS,
        correlation_id: str = "",
    ) -> str: ...


@runtime_checkable
class TextCompleter(Protocol):
    def complete(
        self,
        messages: Sequence[Message],
        *,
        deadline_ms: int = DEFAULT_DEADLINE_MS,
        correlation_id: str = "",
    ) -> str: ...


@runtime_checkable
class SpeechSynthesizer(Protocol):
    def synthesize(
        self,
        text: str,
        voice_ref: str,
        *,
        deadline_ms: int = DEFAULT_DEADLINE_MS,
        correlation_id: str = "",
    ) -> AudioHandle: ...


@dataclass(frozen=True)
class ScriptedReply:
    """One queued mock reply; ``pattern`` (regex) asserts what the call was about."""

    reply: str
    pattern: str | None = None


class _ScriptedMockBase:
    """Shared queue/latency/tracing machinery for the four mock providers.

    Replies are consumed strictly in order. In strict mode an empty queue is
    an error; otherwise ``default_reply`` (or an echo, where meaningful) is
    used. Calls serialize internally so mocks are safe under concurrent
    sessions.
    """

    component = "mllm"

    def __init__(
        self,
        *,
        clock: Clock,
        latency_ms: int,
        session_id: str = "",
        tracer: Tracer | None = None,
        replies: Sequence[ScriptedReply | str] = (),
        strict: bool = True,
        default_reply: str | None = None,
    ) -> None:
        self._clock = clock
        self._latency_ms = int(latency_ms)
        self._session_id = session_id
        self._tracer = tracer
        self._queue: list[ScriptedReply] = [
            r if isinstance(r, ScriptedReply) else ScriptedReply(reply=r) for r in replies
        ]
        self._strict = strict
        self._default_reply = default_reply
        self._lock = threading.Lock()
        self.calls = 0

    def remaining(self) -> int:
        with self._lock:
            return len(self._queue)

    def _next_reply(self, subject: str, fallback: str | None) -> str:
        with self._lock:
            self.calls += 1
            if self._queue:
                entry = self._queue.pop(0)
                if entry.pattern is not None and not re.search(entry.pattern, subject, re.S):
                    raise ScriptMismatch(
                        f"scripted pattern {entry.pattern!r} does not match call subject"
                    )
                return entry.reply
        if self._strict:
            raise ScriptExhausted(f"{type(self).__name__} has no scripted reply left")
        if self._default_reply is not None:
            return self._default_reply
        if fallback is not None:
            return fallback
        raise ScriptExhausted(f"{type(self).__name__} has no reply and no default")

    def _timed_call(self, deadline_ms: int, correlation_id: str) -> None:
        """Advance the clock by min(latency, deadline); raise on timeout."""
        if deadline_ms <= 0:
            raise ValueError("deadline_ms must be > 0")
        start = self._clock.now_ms()
        waited = min(self._latency_ms, deadline_ms)
        self._clock.sleep_ms(waited)
        if self._tracer is not None:
            self._tracer.record(
                TraceSpan(
                    component=self.component,
                    start_ms=start,
                    end_ms=start + waited,
                    session_id=self._session_id,
                    correlation_id=correlation_id,
                )
            )
        if self._latency_ms > deadline_ms:
            raise ProviderTimeout(
                f"{type(self).__name__} latency {self._latency_ms} ms exceeded "
                f"deadline {deadline_ms} ms"
            )


class MockSpeechToText(_ScriptedMockBase):
    """Echoes the event's ``text`` field unless a scripted reply overrides it."""

    component = "stt"

    def __init__(self, **kwargs) -> None:
        kwargs.setdefault("strict", False)
        super().__init__(**kwargs)

    def transcribe(
        self, event: dict, *, deadline_ms: int = DEFAULT_DEADLINE_MS, correlation_id: str = ""
    ) -> str:
        fallback = event.get("text")
        text = self._next_reply(str(fallback or ""), fallback)
        self._timed_call(deadline_ms, correlation_id)
        return text


class MockVisionDescriber(_ScriptedMockBase):
    """Returns scripted scene descriptions in order."""

    component = "mllm"

    def describe(
        self,
        frames: Sequence,
        prompt: str,
        *,
        deadline_ms: int = DEFAULT_DEADLINE_MS,
        correlation_id: str = "",
    ) -> str:
        reply = self._next_reply(prompt, None)
        self._timed_call(deadline_ms, correlation_id)
        return reply


class MockTextCompleter(_ScriptedMockBase):
    """Returns scripted completions in order; the pattern is matched against
    the last message's content."""

    component = "mllm"

    def __init__(self, *, component: str = "mllm", **kwargs) -> None:
        super().__init__(**kwargs)
        self.component = component

    def complete(
        self,
        messages: Sequence[Message],
        *,
        deadline_ms: int = DEFAULT_DEADLINE_MS,
        correlation_id: str = "",
    ) -> str:
        subject = messages[-1]["content"] if messages else ""
        reply = self._next_reply(subject, None)
        self._timed_call(deadline_ms, correlation_id)
        return reply


class MockSpeechSynthesizer(_ScriptedMockBase):
    """Produces deterministic opaque audio handles."""

    component = "tts"

    def __init__(self, **kwargs) -> None:
        kwargs.setdefault("strict", False)
        super().__init__(**kwargs)
        self._handle_seq = 0

    def synthesize(
        self,
        text: str,
        voice_ref: str,
        *,
        deadline_ms: int = DEFAULT_DEADLINE_MS,
        correlation_id: str = "",
    ) -> AudioHandle:
        self._timed_call(deadline_ms, correlation_id)
        with self._lock:
            self.calls += 1
            ref = f"audio:{self._session_id or 'default'}:{self._handle_seq}"
            self._handle_seq += 1
        # Rough speaking-time estimate: 330 ms per word, floor one word.
        duration = 330 * max(1, len(text.split()))
        return AudioHandle(ref=ref, duration_ms=duration)


@dataclass
class ProviderBundle:
    """Everything one session needs to talk to the outside world."""

    stt: SpeechToText
    describer: VisionDescriber
    completer: TextCompleter
    classifier: TextCompleter
    tts: SpeechSynthesizer
    profile: ProviderLatencyProfile = field(default_factory=ProviderLatencyProfile)


def mock_bundle(
    *,
    clock: Clock,
    session_id: str = "",
    tracer: Tracer | None = None,
    profile: ProviderLatencyProfile | None = None,
    stt_replies: Sequence[ScriptedReply | str] = (),
    describer_replies: Sequence[ScriptedReply | str] = (),
    completer_replies: Sequence[ScriptedReply | str] = (),
    classifier_replies: Sequence[ScriptedReply | str] = (),
    strict: bool = True,
    completer_default: str | None = None,
    classifier_default: str | None = None,
    describer_default: str | None = None,
) -> ProviderBundle:
    """Assemble a fully scripted mock provider set for one session."""
    profile = profile or ProviderLatencyProfile()
    common = dict(clock=clock, session_id=session_id, tracer=tracer)
    return ProviderBundle(
        stt=MockSpeechToText(
            latency_ms=profile.stt_ms, replies=stt_replies, strict=False, **common
        ),
        describer=MockVisionDescriber(
            latency_ms=profile.mllm_ms,
            replies=describer_replies,
            strict=strict,
            default_reply=describer_default,
            **common,
        ),
        completer=MockTextCompleter(
            component="mllm",
            latency_ms=profile.mllm_ms,
            replies=completer_replies,
            strict=strict,
            default_reply=completer_default,
            **common,
        ),
        classifier=MockTextCompleter(
            component="classifier",
            latency_ms=profile.mllm_ms,
            replies=classifier_replies,
            strict=strict,
            default_reply=classifier_default,
            **common,
        ),
        tts=MockSpeechSynthesizer(latency_ms=profile.tts_ms, **common),
        profile=profile,
    )
