"""Clock abstraction shared by providers, the agent, and the scenario runner.

Everything downstream reads time in session-relative milliseconds. The
simulated clock never sleeps; waiting is modelled as an instantaneous jump
forward, which is what makes scenario replays byte-deterministic.
"""

from __future__ import annotations

import time
from typing import Protocol, runtime_checkable


@runtime_checkable
class Clock(Protocol):
    def now_ms(self) -> int: ...

    def sleep_ms(self, duration_ms: int) -> None: ...


class SimulatedClock:
    """Monotone millisecond clock that advances only on request."""

    def __init__(self, start_ms: int = 0) -> None:
        self._now_ms = int(start_ms)

    def now_ms(self) -> int:
        return self._now_ms

    def sleep_ms(self, duration_ms: int) -> None:
        if duration_ms < 0:
            raise ValueError(f"cannot sleep a negative duration: {duration_ms}")
        self._now_ms += int(duration_ms)

    def advance_to(self, target_ms: int) -> None:
        """Jump forward to ``target_ms``; moving backwards is an authoring error."""
        target_ms = int(target_ms)
        if target_ms < self._now_ms:
            raise ValueError(
                f"cannot move clock backwards from {self._now_ms} to {target_ms}"
            )
        self._now_ms = target_ms


class WallClock:
    """Real clock for live sessions; milliseconds since construction."""

    def __init__(self) -> None:
        self._t0 = time.monotonic()

    def now_ms(self) -> int:
        return int((time.monotonic() - self._t0) * 1000)

    def sleep_ms(self, duration_ms: int) -> None:
        if duration_ms > 0:
            time.sleep(duration_ms / 1000.0)
