"""User goal/trait capture and persona prompt rendering.

A profile is the handful of facts the rest of the pipeline personalizes on:
the goal being pursued, a description of the ideal self, a synthesis voice
reference, and how long the user must be quiet before the agent may speak.
Rendering substitutes the role/goal pair into the fixed persona template,
byte-for-byte reproducibly.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import NudgeKitError

DEFAULT_QUIET_THRESHOLD_MS = 3000

PROFILE_FIELDS = ("user_id", "goal", "role_traits", "voice_ref", "quiet_threshold_ms")


class EmptyGoal(NudgeKitError):
    """Profile setup is missing the goal text."""


class EmptyTraits(NudgeKitError):
    """Profile setup is missing the ideal-self trait description."""


class ProfileSchemaError(NudgeKitError):
    """A stored profile document does not match the expected JSON schema."""


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    goal: str
    role_traits: str
    voice_ref: str = ""
    quiet_threshold_ms: int = DEFAULT_QUIET_THRESHOLD_MS

    def __post_init__(self) -> None:
        if not self.goal.strip():
            raise EmptyGoal("goal must be non-empty")
        if not self.role_traits.strip():
            raise EmptyTraits("role_traits must be non-empty")
        if self.quiet_threshold_ms <= 0:
            raise ValueError("quiet_threshold_ms must be > 0")

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in PROFILE_FIELDS}


@dataclass(frozen=True)
class PersonaPrompt:
    text: str
    profile_hash: str


def _load_asset(name: str) -> str:
    return resources.files("nudgekit.assets").joinpath(name).read_text(encoding="utf-8")


_TEMPLATE: str | None = None


def persona_template() -> str:
    """The checked-in persona template with {role} and {goal} placeholders."""
    global _TEMPLATE
    if _TEMPLATE is None:
        _TEMPLATE = _load_asset("persona_template.txt")
    return _TEMPLATE


def create_profile(
    goal: str,
    role_traits: str,
    voice_ref: str = "",
    *,
    user_id: str | None = None,
    quiet_threshold_ms: int = DEFAULT_QUIET_THRESHOLD_MS,
) -> UserProfile:
    """Validate and assemble a profile; identical inputs yield identical profiles.

    When no user_id is given, one is derived from the content so that
    repeated setup with the same answers is idempotent.
    """
    goal = goal.strip()
    role_traits = role_traits.strip()
    if not goal:
        raise EmptyGoal("goal must be non-empty")
    if not role_traits:
        raise EmptyTraits("role_traits must be non-empty")
    if user_id is None:
        digest = hashlib.sha256(
            "\x1f".join((goal, role_traits, voice_ref)).encode("utf-8")
        ).hexdigest()
        user_id = f"user-{digest[:12]}"
    return UserProfile(
        user_id=user_id,
        goal=goal,
        role_traits=role_traits,
        voice_ref=voice_ref,
        quiet_threshold_ms=quiet_threshold_ms,
    )


def render_persona_prompt(profile: UserProfile) -> PersonaPrompt:
    """Substitute role/goal into the template. Pure; byte-identical per profile.

    Substitution is literal (no escaping), so the goal and trait text appear
    in the prompt exactly as entered.
    """
    text = persona_template().replace("{role}", profile.role_traits).replace(
        "{goal}", profile.goal
    )
    digest = hashlib.sha256(
        "\x1f".join((profile.goal, profile.role_traits)).encode("utf-8")
    ).hexdigest()
    return PersonaPrompt(text=text, profile_hash=digest)


class ProfileStore:
    """One JSON document per user under a data directory.

    Single-writer, multi-reader: writes go through an atomic rename, reads
    never see partial documents. Unknown keys are rejected on load so a
    mistyped field fails loudly instead of silently defaulting.
    """

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, user_id: str) -> Path:
        return self.root / f"{user_id}.json"

    def save(self, profile: UserProfile) -> Path:
        path = self._path(profile.user_id)
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(
            json.dumps(profile.to_dict(), ensure_ascii=False, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        os.replace(tmp, path)
        return path

    def load(self, user_id: str) -> UserProfile:
        path = self._path(user_id)
        if not path.exists():
            raise ProfileSchemaError(f"no stored profile for {user_id!r}")
        return profile_from_dict(json.loads(path.read_text(encoding="utf-8")))

    def list_ids(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob("*.json"))


def profile_from_dict(doc: dict) -> UserProfile:
    if not isinstance(doc, dict):
        raise ProfileSchemaError("profile document must be a JSON object")
    unknown = set(doc) - set(PROFILE_FIELDS)
    if unknown:
        raise ProfileSchemaError(f"unknown profile keys: {sorted(unknown)}")
    missing = [k for k in ("user_id", "goal", "role_traits") if k not in doc]
    if missing:
        raise ProfileSchemaError(f"missing profile keys: {missing}")
    if not isinstance(doc.get("quiet_threshold_ms", DEFAULT_QUIET_THRESHOLD_MS), int):
        raise ProfileSchemaError("quiet_threshold_ms must be an integer")
    return UserProfile(
        user_id=str(doc["user_id"]),
        goal=str(doc["goal"]),
        role_traits=str(doc["role_traits"]),
        voice_ref=str(doc.get("voice_ref", "")),
        quiet_threshold_ms=int(doc.get("quiet_threshold_ms", DEFAULT_QUIET_THRESHOLD_MS)),
    )
