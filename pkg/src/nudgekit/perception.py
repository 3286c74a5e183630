"""Scene description over filtered frame batches.

A non-empty batch is submitted to a vision describer with the fixed
first-person scene prompt; empty batches are skipped. Because describe
calls may complete out of order when run concurrently, an
:class:`ObservationSequencer` re-establishes batch order before
observations reach the classifier.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from importlib import resources

from .clock import Clock
from .frame_pipeline import FrameBatch
from .providers import VisionDescriber

DEFAULT_DESCRIBE_DEADLINE_MS = 2000


@dataclass(frozen=True)
class SceneObservation:
    batch_id: int
    ts_ms: int
    description: str
    kept_frame_ids: tuple[int, ...]

    @property
    def ref(self) -> str:
        return f"batch-{self.batch_id}"


_SCENE_PROMPT: str | None = None


def scene_prompt() -> str:
    """The fixed scene-description prompt, verbatim from the checked-in asset."""
    global _SCENE_PROMPT
    if _SCENE_PROMPT is None:
        _SCENE_PROMPT = (
            resources.files("nudgekit.assets")
            .joinpath("scene_prompt.txt")
            .read_text(encoding="utf-8")
            .rstrip("\n")
        )
    return _SCENE_PROMPT


def describe_batch(
    batch: FrameBatch,
    provider: VisionDescriber,
    *,
    clock: Clock,
    deadline_ms: int = DEFAULT_DESCRIBE_DEADLINE_MS,
) -> SceneObservation | None:
    """Describe one batch's kept frames; None when nothing survived filtering.

    Provider timeouts and failures propagate to the caller, which logs them
    and skips the batch; the pipeline keeps running.
    """
    if not batch.kept_frame_ids:
        return None
    description = provider.describe(
        batch.kept_frames,
        scene_prompt(),
        deadline_ms=deadline_ms,
        correlation_id=f"batch-{batch.batch_id}",
    )
    return SceneObservation(
        batch_id=batch.batch_id,
        ts_ms=clock.now_ms(),
        description=description,
        kept_frame_ids=batch.kept_frame_ids,
    )


class ObservationSequencer:
    """Releases observations strictly in batch_id order.

    ``push`` buffers an out-of-order observation until its predecessors have
    either arrived or been declared skipped (empty or failed batches).
    """

    def __init__(self, first_batch_id: int = 0) -> None:
        self._next = first_batch_id
        self._buffer: list[tuple[int, SceneObservation | None]] = []

    def push(self, observation: SceneObservation) -> list[SceneObservation]:
        heapq.heappush(self._buffer, (observation.batch_id, observation))
        return self._drain()

    def skip(self, batch_id: int) -> list[SceneObservation]:
        heapq.heappush(self._buffer, (batch_id, None))
        return self._drain()

    def _drain(self) -> list[SceneObservation]:
        released: list[SceneObservation] = []
        while self._buffer and self._buffer[0][0] == self._next:
            _, observation = heapq.heappop(self._buffer)
            self._next += 1
            if observation is not None:
                released.append(observation)
        return released
