"""Exhaustive gate-formula checks against a hand-computed truth table."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nudgekit.context_classifier import Verdict
from nudgekit.debouncer import (
    DebounceConfig,
    DebounceState,
    TriggerReason,
    reset,
    step,
)

# Hand-computed oracle for every (prev, verdict, R_t mod 3) combination,
# where R_t is the step count after the evaluation. UNSURE folds to the
# previous effective state and can never fire.
TRUTH_TABLE = {
    ("NO", "YES", 0): (True, "state_change"),
    ("NO", "YES", 1): (True, "state_change"),
    ("NO", "YES", 2): (True, "state_change"),
    ("NO", "NO", 0): (False, "not_relevant"),
    ("NO", "NO", 1): (False, "not_relevant"),
    ("NO", "NO", 2): (False, "not_relevant"),
    ("NO", "UNSURE", 0): (False, "not_relevant"),
    ("NO", "UNSURE", 1): (False, "not_relevant"),
    ("NO", "UNSURE", 2): (False, "not_relevant"),
    ("YES", "YES", 0): (True, "interval"),
    ("YES", "YES", 1): (False, "suppressed"),
    ("YES", "YES", 2): (False, "suppressed"),
    ("YES", "NO", 0): (False, "not_relevant"),
    ("YES", "NO", 1): (False, "not_relevant"),
    ("YES", "NO", 2): (False, "not_relevant"),
    ("YES", "UNSURE", 0): (False, "suppressed"),
    ("YES", "UNSURE", 1): (False, "suppressed"),
    ("YES", "UNSURE", 2): (False, "suppressed"),
}


def _state(prev: str, step_count_mod: int) -> DebounceState:
    # choose a pre-step count so that the count after increment has the
    # requested residue; 3..5 keeps counts positive for every residue
    before = {0: 5, 1: 3, 2: 4}[step_count_mod]
    return DebounceState(prev_verdict=Verdict(prev), step_count=before)


def test_truth_table_is_exhaustive():
    assert len(TRUTH_TABLE) == 18


@pytest.mark.parametrize("prev,verdict,mod", sorted(TRUTH_TABLE))
def test_step_matches_truth_table(prev, verdict, mod):
    state = _state(prev, mod)
    expected_trigger, expected_reason = TRUTH_TABLE[(prev, verdict, mod)]
    decision = step(state, Verdict(verdict))
    assert decision.trigger is expected_trigger
    assert decision.reason == TriggerReason(expected_reason)
    assert decision.step % 3 == mod


def test_spec_walkthrough_examples():
    state = DebounceState()
    first = step(state, Verdict.YES)
    assert (first.trigger, first.reason, first.step) == (True, TriggerReason.STATE_CHANGE, 1)

    state = DebounceState(prev_verdict=Verdict.YES, step_count=5)
    sixth = step(state, Verdict.YES)
    assert (sixth.trigger, sixth.reason, sixth.step) == (True, TriggerReason.INTERVAL, 6)

    state = DebounceState(prev_verdict=Verdict.YES, step_count=3)
    fourth = step(state, Verdict.YES)
    assert (fourth.trigger, fourth.reason) == (False, TriggerReason.SUPPRESSED)

    state = DebounceState(prev_verdict=Verdict.YES, step_count=3)
    drop = step(state, Verdict.NO)
    assert (drop.trigger, drop.reason) == (False, TriggerReason.NOT_RELEVANT)
    assert state.prev_verdict == Verdict.NO

    state = DebounceState(prev_verdict=Verdict.YES, step_count=3)
    hold = step(state, Verdict.UNSURE)
    assert hold.trigger is False
    assert state.prev_verdict == Verdict.YES  # UNSURE keeps the previous state


def test_unsure_never_updates_to_unsure():
    state = DebounceState()
    for verdict in [Verdict.UNSURE, Verdict.YES, Verdict.UNSURE, Verdict.NO, Verdict.UNSURE]:
        step(state, verdict)
        assert state.prev_verdict in (Verdict.YES, Verdict.NO)


def test_constant_yes_stream_fires_first_then_every_third():
    state = DebounceState()
    fired = [step(state, Verdict.YES).trigger for _ in range(12)]
    expected = [(i == 1) or (i % 3 == 0) for i in range(1, 13)]
    assert fired == expected


def test_no_and_unsure_streams_never_fire():
    state = DebounceState()
    pattern = [Verdict.NO, Verdict.UNSURE, Verdict.UNSURE, Verdict.NO] * 10
    assert not any(step(state, v).trigger for v in pattern)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from([Verdict.YES, Verdict.NO, Verdict.UNSURE]), max_size=40))
def test_step_counter_counts_every_evaluation(verdicts):
    state = DebounceState()
    for i, verdict in enumerate(verdicts, start=1):
        decision = step(state, verdict)
        assert decision.step == i
    assert state.step_count == len(verdicts)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from([Verdict.YES, Verdict.NO, Verdict.UNSURE]), max_size=40))
def test_trigger_implies_triggering_reason(verdicts):
    state = DebounceState()
    for verdict in verdicts:
        decision = step(state, verdict)
        if decision.trigger:
            assert decision.reason in (TriggerReason.STATE_CHANGE, TriggerReason.INTERVAL)
        else:
            assert decision.reason in (TriggerReason.SUPPRESSED, TriggerReason.NOT_RELEVANT)


def test_configurable_interval():
    state = DebounceState(prev_verdict=Verdict.YES, step_count=4)
    decision = step(state, Verdict.YES, DebounceConfig(interval=5))
    assert decision.trigger and decision.reason == TriggerReason.INTERVAL


def test_reset_restores_initial_state():
    state = DebounceState(prev_verdict=Verdict.YES, step_count=100)
    reset(state)
    assert state == DebounceState()
    first = step(state, Verdict.YES)
    assert first.trigger and first.reason == TriggerReason.STATE_CHANGE


def test_reset_idempotent():
    state = DebounceState()
    assert reset(state) == reset(state)


def test_decision_payload_shape():
    state = DebounceState()
    payload = step(state, Verdict.YES).to_payload()
    assert payload == {"R_t": 1, "verdict": "YES", "trigger": True, "reason": "state_change"}
