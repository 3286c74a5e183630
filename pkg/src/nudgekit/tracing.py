"""Per-component latency spans and end-to-end budget accounting.

Every provider call records exactly one :class:`TraceSpan`. Spans that share
a ``correlation_id`` form one interaction chain (speech in, spoken reply
out); :func:`end_to_end_latency` sums the chain and checks it against the
sub-second budget.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

from .errors import NudgeKitError

COMPONENTS = frozenset({"stt", "mllm", "tts", "classifier", "agent"})

# Components that make up one speech-to-speech interaction, in pipeline order.
INTERACTION_CHAIN = ("stt", "mllm", "tts")

DEFAULT_BUDGET_MS = 1000


class IncompleteTrace(NudgeKitError):
    """An interaction chain is missing one of its required component spans."""


@dataclass(frozen=True)
class TraceSpan:
    component: str
    start_ms: int
    end_ms: int
    session_id: str
    correlation_id: str

    def __post_init__(self) -> None:
        if self.component not in COMPONENTS:
            raise ValueError(f"unknown trace component: {self.component!r}")
        if self.end_ms < self.start_ms:
            raise ValueError(
                f"span ends before it starts: {self.start_ms}..{self.end_ms}"
            )

    @property
    def duration_ms(self) -> int:
        return self.end_ms - self.start_ms

    def to_dict(self) -> dict:
        return {
            "component": self.component,
            "start_ms": self.start_ms,
            "end_ms": self.end_ms,
            "session_id": self.session_id,
            "correlation_id": self.correlation_id,
        }


@dataclass(frozen=True)
class LatencyReport:
    """Summed interaction chain with the budget verdict."""

    total_ms: int
    budget_ok: bool
    by_component: dict

    def to_dict(self) -> dict:
        return {
            "total_ms": self.total_ms,
            "budget_ok": self.budget_ok,
            "by_component": dict(self.by_component),
        }


class Tracer:
    """Append-only span collector, safe to share across provider calls."""

    def __init__(self, on_span: Callable[[TraceSpan], None] | None = None) -> None:
        self._spans: list[TraceSpan] = []
        self._lock = threading.Lock()
        self._on_span = on_span

    def set_on_span(self, on_span: Callable[[TraceSpan], None] | None) -> None:
        self._on_span = on_span

    def record(self, span: TraceSpan) -> None:
        with self._lock:
            self._spans.append(span)
        if self._on_span is not None:
            self._on_span(span)

    @property
    def spans(self) -> list[TraceSpan]:
        with self._lock:
            return list(self._spans)

    def for_correlation(self, correlation_id: str) -> list[TraceSpan]:
        return [s for s in self.spans if s.correlation_id == correlation_id]

    def export_jsonl(self, path: str | Path) -> None:
        """One span per line, stable key order."""
        lines = [json.dumps(s.to_dict(), sort_keys=True) for s in self.spans]
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def end_to_end_latency(
    spans: Iterable[TraceSpan], budget_ms: int = DEFAULT_BUDGET_MS
) -> LatencyReport:
    """Sum the stt -> mllm -> tts chain of one interaction.

    Raises IncompleteTrace when any chain component has no span. Spans from
    other components (classifier, agent) may be present and are ignored.
    """
    totals: dict[str, int] = {}
    for span in spans:
        if span.component in INTERACTION_CHAIN:
            totals[span.component] = totals.get(span.component, 0) + span.duration_ms
    missing = [c for c in INTERACTION_CHAIN if c not in totals]
    if missing:
        raise IncompleteTrace(f"interaction chain missing spans for: {', '.join(missing)}")
    total = sum(totals.values())
    return LatencyReport(total_ms=total, budget_ok=total < budget_ms, by_component=totals)
