"""Trigger gating for classified context changes.

A response fires only when the context becomes relevant (a NO -> YES edge)
or at a fixed cadence while it stays relevant (every third evaluation by
default). UNSURE verdicts are absorbed: the previous effective state is
kept and nothing can fire, so classifier uncertainty never interrupts.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .context_classifier import Verdict


class TriggerReason(str, Enum):
    STATE_CHANGE = "state_change"
    INTERVAL = "interval"
    SUPPRESSED = "suppressed"
    NOT_RELEVANT = "not_relevant"


@dataclass(frozen=True)
class DebounceConfig:
    # Fire every `interval`-th evaluation while the state stays YES.
    interval: int = 3

    def __post_init__(self) -> None:
        if self.interval < 1:
            raise ValueError("interval must be >= 1")


@dataclass
class DebounceState:
    """Per-session gate state: previous effective verdict and evaluation count.

    prev_verdict starts at NO so a session can fire on its first relevant
    observation; it only ever holds YES or NO (UNSURE is folded away).
    """

    prev_verdict: Verdict = Verdict.NO
    step_count: int = 0


@dataclass(frozen=True)
class DebounceDecision:
    trigger: bool
    reason: TriggerReason
    step: int
    verdict: Verdict  # effective verdict after UNSURE-folding

    def to_payload(self) -> dict:
        return {
            "R_t": self.step,
            "verdict": self.verdict.value,
            "trigger": self.trigger,
            "reason": self.reason.value,
        }


DEFAULT_CONFIG = DebounceConfig()


def step(
    state: DebounceState, verdict: Verdict, config: DebounceConfig = DEFAULT_CONFIG
) -> DebounceDecision:
    """Evaluate one verdict; mutates ``state`` and returns the gate decision."""
    state.step_count += 1
    unsure = verdict is Verdict.UNSURE
    effective = state.prev_verdict if unsure else verdict

    if effective is Verdict.YES and not unsure and effective is not state.prev_verdict:
        decision = DebounceDecision(True, TriggerReason.STATE_CHANGE, state.step_count, effective)
    elif effective is Verdict.YES and not unsure and state.step_count % config.interval == 0:
        decision = DebounceDecision(True, TriggerReason.INTERVAL, state.step_count, effective)
    elif effective is Verdict.YES:
        decision = DebounceDecision(False, TriggerReason.SUPPRESSED, state.step_count, effective)
    else:
        decision = DebounceDecision(False, TriggerReason.NOT_RELEVANT, state.step_count, effective)

    state.prev_verdict = effective
    return decision


def reset(state: DebounceState) -> DebounceState:
    """Restore the initial gate state in place (session boundary)."""
    state.prev_verdict = Verdict.NO
    state.step_count = 0
    return state
