"""Deterministic scenario replay on a simulated clock.

A scenario script is one JSON document (schema version 1): a user profile,
provider mock scripts, and a time-ordered event list (frames, utterances,
other-speaker toggles). The runner feeds events through the gateway hub,
advancing the simulated clock to each event and by provider latencies
during calls; nothing sleeps. Identical scripts produce byte-identical
session logs, which makes golden-log comparison a plain line diff.

Frame payloads may be inline synthetic grids (deterministic generators, no
RNG) or image files decoded at this boundary; nothing downstream touches
codecs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .clock import SimulatedClock
from .engine import SessionEngine, engine_from_payload
from .errors import NudgeKitError
from .frame_pipeline import FrameSample
from .gateway import Envelope, SessionHub, encode
from .user_model import profile_from_dict

SCHEMA_VERSION = 1

EVENT_KINDS = frozenset({"frame", "frame_burst", "utterance", "other_speaker"})


class ScriptInvalid(NudgeKitError):
    """The scenario document violates the script schema."""


class MissingAsset(NudgeKitError):
    """A frame event references an image file that does not exist."""


class GoldenMissing(NudgeKitError):
    """The golden log referenced for comparison does not exist."""


@dataclass(frozen=True)
class ScriptEvent:
    at_ms: int
    kind: str  # frame | utterance | other_speaker
    payload: dict


@dataclass
class ScenarioScript:
    name: str
    profile: dict
    providers: dict
    config: dict
    events: list[ScriptEvent]
    base_dir: Path = field(default_factory=Path)


@dataclass
class RunResult:
    session_id: str
    log: list[Envelope]
    metrics: dict

    def log_lines(self) -> list[str]:
        return [encode(envelope) for envelope in self.log]

    def log_text(self) -> str:
        lines = self.log_lines()
        return "\n".join(lines) + ("\n" if lines else "")


# -- synthetic frames ----------------------------------------------------------


def synth_pixels(spec: dict, base_dir: Path | None = None) -> np.ndarray:
    """Materialize a frame image from its script spec.

    Generators are pure integer arithmetic so replays stay deterministic
    across platforms; ``file`` specs decode through Pillow here, at the
    runner boundary.
    """
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ScriptInvalid(f"image spec must have exactly one generator key: {spec!r}")
    kind, args = next(iter(spec.items()))
    if kind == "grid":
        grid = np.asarray(args, dtype=np.float64)
        if grid.ndim not in (2, 3):
            raise ScriptInvalid("grid must be 2-D grayscale or 3-D color")
        return grid
    if kind == "file":
        from PIL import Image

        path = (base_dir or Path(".")) / str(args)
        if not path.exists():
            raise MissingAsset(f"frame image not found: {path}")
        return np.asarray(Image.open(path).convert("L"), dtype=np.float64)
    if kind == "constant":
        h, w = (int(x) for x in args.get("size", (24, 32)))
        return np.full((h, w), float(args.get("value", 128)), dtype=np.float64)
    if kind == "checker":
        h, w = (int(x) for x in args.get("size", (24, 32)))
        cell = int(args.get("cell", 4))
        phase = int(args.get("phase", 0))
        low, high = float(args.get("low", 0)), float(args.get("high", 255))
        i = np.arange(h).reshape(-1, 1) // cell
        j = np.arange(w) // cell
        return np.where((i + j + phase) % 2 == 0, low, high).astype(np.float64)
    if kind == "hashnoise":
        h, w = (int(x) for x in args.get("size", (24, 32)))
        seed = int(args.get("seed", 0))
        i = np.arange(h, dtype=np.int64).reshape(-1, 1)
        j = np.arange(w, dtype=np.int64)
        return ((i * 73856093 + j * 19349663 + seed * 83492791) % 256).astype(np.float64)
    raise ScriptInvalid(f"unknown image generator: {kind!r}")


# -- script loading ---------------------------------------------------------------


def _expand_events(raw_events: list, base_dir: Path) -> list[ScriptEvent]:
    events: list[ScriptEvent] = []
    for idx, raw in enumerate(raw_events):
        if not isinstance(raw, dict) or "at_ms" not in raw or "kind" not in raw:
            raise ScriptInvalid(f"event {idx} must carry at_ms and kind")
        at_ms = raw["at_ms"]
        kind = raw["kind"]
        if not isinstance(at_ms, int) or at_ms < 0:
            raise ScriptInvalid(f"event {idx}: at_ms must be a non-negative integer")
        if kind not in EVENT_KINDS:
            raise ScriptInvalid(f"event {idx}: unknown kind {kind!r}")
        if kind == "frame":
            pixels = synth_pixels(raw.get("image", {}), base_dir)
            events.append(ScriptEvent(at_ms, "frame", {"pixels": pixels}))
        elif kind == "frame_burst":
            count = int(raw.get("count", 10))
            interval = int(raw.get("interval_ms", 200))
            seed_step = int(raw.get("seed_step", 0))
            image = raw.get("image", {})
            if count < 1 or interval < 0:
                raise ScriptInvalid(f"event {idx}: bad burst shape")
            for k in range(count):
                spec = image
                if seed_step and "hashnoise" in image:
                    args = dict(image["hashnoise"])
                    args["seed"] = int(args.get("seed", 0)) + k * seed_step
                    spec = {"hashnoise": args}
                pixels = synth_pixels(spec, base_dir)
                events.append(ScriptEvent(at_ms + k * interval, "frame", {"pixels": pixels}))
        elif kind == "utterance":
            text = raw.get("text")
            if not isinstance(text, str):
                raise ScriptInvalid(f"event {idx}: utterance needs text")
            events.append(ScriptEvent(at_ms, "utterance", {"text": text}))
        else:  # other_speaker
            events.append(
                ScriptEvent(at_ms, "other_speaker", {"active": bool(raw.get("active"))})
            )
    order = sorted(range(len(events)), key=lambda i: (events[i].at_ms, i))
    ordered = [events[i] for i in order]
    return ordered


def parse_script(doc: dict, *, name: str = "scenario", base_dir: Path | None = None) -> ScenarioScript:
    if not isinstance(doc, dict):
        raise ScriptInvalid("script must be a JSON object")
    if doc.get("version") != SCHEMA_VERSION:
        raise ScriptInvalid(f"unsupported script version: {doc.get('version')!r}")
    base_dir = base_dir or Path(".")
    try:
        profile = profile_from_dict(doc["profile"])
    except KeyError:
        raise ScriptInvalid("script is missing the profile section") from None
    except NudgeKitError as exc:
        raise ScriptInvalid(f"bad profile: {exc}") from exc
    events = _expand_events(doc.get("events", []), base_dir)
    return ScenarioScript(
        name=str(doc.get("name", name)),
        profile=profile.to_dict(),
        providers=dict(doc.get("providers", {})),
        config=dict(doc.get("config", {})),
        events=events,
        base_dir=base_dir,
    )


def load_script(path: str | Path) -> ScenarioScript:
    path = Path(path)
    if not path.exists():
        raise ScriptInvalid(f"script not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise ScriptInvalid(f"script is not valid JSON: {exc}") from exc
    return parse_script(doc, name=path.stem, base_dir=path.parent)


def bundled_scenario_path(name: str) -> Path:
    """Path to one of the shipped scenario scripts (e.g. 'healthy_diet')."""
    from importlib import resources

    resource = resources.files("nudgekit.scenarios").joinpath(f"{name}.json")
    with resources.as_file(resource) as path:
        return Path(path)


# -- execution ------------------------------------------------------------------


def run(script: ScenarioScript, *, session_id: str | None = None) -> RunResult:
    """Replay one script through the full pipeline; see module docstring."""
    session_id = session_id or script.name
    clock = SimulatedClock()

    def factory(envelope: Envelope) -> SessionEngine:
        return engine_from_payload(envelope.session_id, envelope.payload, clock)

    hub = SessionHub(factory)
    inbound_seq = 0
    hub.route(
        Envelope(
            type="session_start",
            session_id=session_id,
            seq=inbound_seq,
            ts_ms=0,
            payload={
                "profile": script.profile,
                "providers": script.providers,
                "config": script.config,
            },
        )
    )
    engine = hub.engine_of(session_id)

    def drain_wakeups(until_ms: int | None) -> None:
        while True:
            wakeup = engine.next_wakeup_ms()
            if wakeup is None or (until_ms is not None and wakeup > until_ms):
                return
            clock.advance_to(max(wakeup, clock.now_ms()))
            hub.tick(session_id)

    frame_id = 0
    for event in script.events:
        drain_wakeups(event.at_ms)
        clock.advance_to(max(event.at_ms, clock.now_ms()))
        if event.kind == "frame":
            hub.push_frame(
                session_id,
                FrameSample(frame_id=frame_id, ts_ms=event.at_ms, pixels=event.payload["pixels"]),
            )
            frame_id += 1
        elif event.kind == "utterance":
            inbound_seq += 1
            hub.route(
                Envelope(
                    type="user_utterance",
                    session_id=session_id,
                    seq=inbound_seq,
                    ts_ms=event.at_ms,
                    payload={"text": event.payload["text"]},
                )
            )
        else:  # other_speaker
            inbound_seq += 1
            hub.route(
                Envelope(
                    type="inject",
                    session_id=session_id,
                    seq=inbound_seq,
                    ts_ms=event.at_ms,
                    payload={"kind": "other_speaker_toggle", "active": event.payload["active"]},
                )
            )
    drain_wakeups(None)
    inbound_seq += 1
    hub.route(
        Envelope(
            type="session_stop",
            session_id=session_id,
            seq=inbound_seq,
            ts_ms=clock.now_ms(),
            payload={},
        )
    )
    return RunResult(session_id=session_id, log=hub.log_of(session_id), metrics=engine.metrics())


# -- golden comparison --------------------------------------------------------------


@dataclass
class GoldenDiff:
    entries: list[str]

    @property
    def empty(self) -> bool:
        return not self.entries

    def report(self) -> str:
        return "\n".join(self.entries) if self.entries else "logs match"


def compare_golden(log_lines: list[str], golden_lines: list[str]) -> GoldenDiff:
    """Field-for-field comparison; timestamps are deterministic, nothing is
    ignored. Reports the first divergent event plus any length mismatch."""
    entries: list[str] = []
    for i, (got, want) in enumerate(zip(log_lines, golden_lines)):
        if got != want:
            entries.append(f"event {i}: expected {want}")
            entries.append(f"event {i}: got      {got}")
            break
    if len(log_lines) > len(golden_lines):
        for i in range(len(golden_lines), len(log_lines)):
            entries.append(f"extra event {i}: {log_lines[i]}")
    elif len(golden_lines) > len(log_lines):
        for i in range(len(log_lines), len(golden_lines)):
            entries.append(f"missing event {i}: {golden_lines[i]}")
    return GoldenDiff(entries)


def compare_golden_file(result: RunResult, golden_path: str | Path) -> GoldenDiff:
    golden_path = Path(golden_path)
    if not golden_path.exists():
        raise GoldenMissing(f"golden log not found: {golden_path}")
    golden_lines = golden_path.read_text(encoding="utf-8").splitlines()
    return compare_golden(result.log_lines(), golden_lines)
