"""Goal-relevance classification of scene observations.

The classifier prompt is the fixed few-shot template with a snippet section
assembled from the user's goal, the recent conversation turns, and the
observation under judgment. The model's completion is reduced to a
three-valued verdict; anything unparseable degrades to UNSURE so the live
loop never stalls on a malformed completion.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources

from .errors import NudgeKitError
from .perception import SceneObservation
from .providers import ProviderError, TextCompleter

logger = logging.getLogger(__name__)

DEFAULT_HISTORY_TURNS = 6
DEFAULT_CLASSIFY_DEADLINE_MS = 2000

# The question substituted into the template's {prompt} slot.
RELEVANCE_QUESTION = "Is the observed situation relevant to the user's goal?"

_VERDICT_TOKEN = re.compile(r"\b(yes|no|unsure)\b", re.IGNORECASE)


class Verdict(str, Enum):
    YES = "YES"
    NO = "NO"
    UNSURE = "UNSURE"


class EmptyObservation(NudgeKitError):
    """Classification was requested for a blank observation."""


class UnparseableVerdict(NudgeKitError):
    """The completion contained no yes/no/unsure token."""


@dataclass(frozen=True)
class ContextState:
    verdict: Verdict
    batch_id: int
    observation_ref: str


@dataclass(frozen=True)
class ClassifierWindow:
    """What the classifier sees: goal, recent turns (oldest first), observation."""

    goal: str
    turns: tuple[tuple[str, str], ...]  # (role, text); role is "user"/"assistant"
    observation: str


_TEMPLATE: str | None = None


def classifier_template() -> str:
    global _TEMPLATE
    if _TEMPLATE is None:
        _TEMPLATE = (
            resources.files("nudgekit.assets")
            .joinpath("classifier_template.txt")
            .read_text(encoding="utf-8")
            .rstrip("\n")
        )
    return _TEMPLATE


def build_classifier_prompt(window: ClassifierWindow) -> str:
    """Render the full classification prompt; byte-deterministic."""
    if not window.observation.strip():
        raise EmptyObservation("cannot classify a blank observation")
    blocks = [f"[Goal]: {window.goal}"]
    for role, text in window.turns:
        blocks.append(f"[{role.upper()}]: {text}")
    blocks.append(f"[*OBSERVATION*]: {window.observation}")
    snippet = "\n\n".join(blocks)
    return (
        classifier_template()
        .replace("{prompt}", RELEVANCE_QUESTION)
        .replace("{snippet}", snippet)
    )


def parse_classifier_output(text: str) -> Verdict:
    """Last standalone yes/no/unsure token wins, case-insensitively."""
    matches = _VERDICT_TOKEN.findall(text)
    if not matches:
        raise UnparseableVerdict(f"no verdict token in completion: {text!r}")
    return Verdict(matches[-1].upper())


def classify(
    observation: SceneObservation,
    *,
    goal: str,
    turns: tuple[tuple[str, str], ...],
    provider: TextCompleter,
    history_limit: int = DEFAULT_HISTORY_TURNS,
    deadline_ms: int = DEFAULT_CLASSIFY_DEADLINE_MS,
) -> ContextState:
    """Classify one observation against the session goal and recent turns.

    Never raises for provider failures or unparseable output; both degrade
    to UNSURE with a warning, and the pipeline continues.
    """
    window = ClassifierWindow(
        goal=goal,
        turns=turns[-history_limit:] if history_limit >= 0 else turns,
        observation=observation.description,
    )
    prompt = build_classifier_prompt(window)
    try:
        reply = provider.complete(
            [{"role": "user", "content": prompt}],
            deadline_ms=deadline_ms,
            correlation_id=observation.ref,
        )
        verdict = parse_classifier_output(reply)
    except ProviderError as exc:
        logger.warning("classifier provider failed for %s: %s", observation.ref, exc)
        verdict = Verdict.UNSURE
    except UnparseableVerdict as exc:
        logger.warning("classifier output unparseable for %s: %s", observation.ref, exc)
        verdict = Verdict.UNSURE
    return ContextState(
        verdict=verdict, batch_id=observation.batch_id, observation_ref=observation.ref
    )
