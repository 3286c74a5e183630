"""Egocentric frame ingestion: sharpness and near-duplicate filtering in
tumbling batches.

Frames arrive as already-decoded pixel grids at a nominal 5 fps. Every
``batch_size`` (default 10) raw frames form one batch; within a batch,
frames below the sharpness gate are dropped first, then survivors that are
near-duplicates of the most recently kept survivor are dropped. A batch is
emitted even when nothing survives, so downstream counters keep advancing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NudgeKitError

# Luma weights for RGB -> grayscale (ITU-R BT.601).
_LUMA = np.array([0.299, 0.587, 0.114])

# 4-neighbor Laplacian kernel: [[0,1,0],[1,-4,1],[0,1,0]], applied to
# interior pixels only (border excluded).


class EmptyImage(NudgeKitError):
    """A pixel grid with zero rows or columns."""


class TooSmall(NudgeKitError):
    """The grid is smaller than the 3x3 minimum the Laplacian needs."""


class DimensionMismatch(NudgeKitError):
    """Two grids that should be comparable have different shapes."""


class OutOfOrderFrame(NudgeKitError):
    """A frame arrived with a non-increasing frame_id."""


@dataclass(frozen=True)
class CameraConfig:
    """Capture parameters; dfov/resolution are recorded metadata only."""

    fps: float = 5.0
    dfov_deg: float = 78.0
    resolution: tuple[int, int] = (1920, 1080)
    batch_size: int = 10

    def __post_init__(self) -> None:
        if self.fps <= 0:
            raise ValueError("fps must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass(frozen=True)
class FilterConfig:
    sharpness_min: float = 25.0
    ssim_drop_threshold: float = 0.95
    ssim_c1: float = (0.01 * 255) ** 2
    ssim_c2: float = (0.03 * 255) ** 2
    # Single global SSIM window; sliding-window variants would hang off this.
    ssim_window: str = "global"

    def __post_init__(self) -> None:
        if not (0 < self.ssim_drop_threshold <= 1):
            raise ValueError("ssim_drop_threshold must be in (0, 1]")
        if self.sharpness_min < 0:
            raise ValueError("sharpness_min must be >= 0")


@dataclass(frozen=True)
class FrameSample:
    frame_id: int
    ts_ms: int
    pixels: np.ndarray  # (H, W) grayscale or (H, W, 3) color, values 0..255

    def gray(self) -> np.ndarray:
        return to_grayscale(self.pixels)


@dataclass(frozen=True)
class FrameBatch:
    batch_id: int
    source_frame_ids: tuple[int, ...]
    kept_frame_ids: tuple[int, ...]
    kept_frames: tuple[np.ndarray, ...]  # original pixel grids of kept frames


def to_grayscale(pixels: np.ndarray) -> np.ndarray:
    """Convert to a float64 luma grid; grayscale input passes through.

    Color conversion is round(0.299 R + 0.587 G + 0.114 B), rounding half to
    even as numpy does.
    """
    arr = np.asarray(pixels, dtype=np.float64)
    if arr.size == 0:
        raise EmptyImage("image has no pixels")
    if arr.ndim == 2:
        return arr
    if arr.ndim == 3 and arr.shape[2] == 3:
        return np.rint(arr @ _LUMA)
    raise EmptyImage(f"expected (H, W) or (H, W, 3) grid, got shape {arr.shape}")


def laplacian_variance(gray: np.ndarray) -> float:
    """Population variance of the 4-neighbor Laplacian over interior pixels."""
    g = np.asarray(gray, dtype=np.float64)
    if g.ndim != 2:
        raise TooSmall(f"expected a 2-D grayscale grid, got shape {g.shape}")
    if g.shape[0] < 3 or g.shape[1] < 3:
        raise TooSmall(f"grid {g.shape} is smaller than 3x3")
    response = (
        g[:-2, 1:-1] + g[2:, 1:-1] + g[1:-1, :-2] + g[1:-1, 2:] - 4.0 * g[1:-1, 1:-1]
    )
    return float(np.var(response))


def ssim(a: np.ndarray, b: np.ndarray, cfg: FilterConfig | None = None) -> float:
    """Global (single-window) structural similarity of two grayscale grids."""
    cfg = cfg or FilterConfig()
    xa = np.asarray(a, dtype=np.float64)
    xb = np.asarray(b, dtype=np.float64)
    if xa.shape != xb.shape:
        raise DimensionMismatch(f"shapes differ: {xa.shape} vs {xb.shape}")
    if xa.size == 0:
        raise EmptyImage("image has no pixels")
    mu_a = float(np.mean(xa))
    mu_b = float(np.mean(xb))
    da = xa - mu_a
    db = xb - mu_b
    var_a = float(np.mean(da * da))
    var_b = float(np.mean(db * db))
    cov = float(np.mean(da * db))
    c1, c2 = cfg.ssim_c1, cfg.ssim_c2
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return num / den


def filter_batch(
    frames: list[FrameSample] | tuple[FrameSample, ...], cfg: FilterConfig | None = None
) -> list[FrameSample]:
    """Apply the two-pass quality filter; returns the kept frames in order.

    Pass 1 drops frames whose Laplacian variance is below the sharpness gate.
    Pass 2 scans survivors left to right and drops any frame whose SSIM
    against the most recently *kept* survivor is at or above the duplicate
    threshold, so a long run of near-identical frames collapses to one.
    """
    cfg = cfg or FilterConfig()
    sharp = [f for f in frames if laplacian_variance(f.gray()) >= cfg.sharpness_min]
    kept: list[FrameSample] = []
    for frame in sharp:
        if not kept:
            kept.append(frame)
            continue
        if ssim(frame.gray(), kept[-1].gray(), cfg) < cfg.ssim_drop_threshold:
            kept.append(frame)
    return kept


class FrameBatcher:
    """Single-consumer accumulator turning an ordered frame stream into
    filtered tumbling batches."""

    def __init__(
        self,
        camera: CameraConfig | None = None,
        filters: FilterConfig | None = None,
    ) -> None:
        self.camera = camera or CameraConfig()
        self.filters = filters or FilterConfig()
        self._pending: list[FrameSample] = []
        self._last_frame_id: int | None = None
        self._frame_shape: tuple[int, ...] | None = None
        self._next_batch_id = 0

    @property
    def pending_count(self) -> int:
        return len(self._pending)

    def reserve_batch_id(self) -> int:
        """Allocate a batch id outside the frame flow (synthetic scene events)."""
        batch_id = self._next_batch_id
        self._next_batch_id += 1
        return batch_id

    def push(self, frame: FrameSample) -> FrameBatch | None:
        """Accumulate one frame; returns a batch every ``batch_size`` pushes."""
        if self._last_frame_id is not None and frame.frame_id <= self._last_frame_id:
            raise OutOfOrderFrame(
                f"frame_id {frame.frame_id} after {self._last_frame_id}"
            )
        shape = np.asarray(frame.pixels).shape[:2]
        if self._frame_shape is None:
            self._frame_shape = shape
        elif shape != self._frame_shape:
            raise DimensionMismatch(
                f"frame {frame.frame_id} is {shape}, session frames are {self._frame_shape}"
            )
        self._last_frame_id = frame.frame_id
        self._pending.append(frame)
        if len(self._pending) < self.camera.batch_size:
            return None
        frames, self._pending = self._pending, []
        kept = filter_batch(frames, self.filters)
        batch = FrameBatch(
            batch_id=self.reserve_batch_id(),
            source_frame_ids=tuple(f.frame_id for f in frames),
            kept_frame_ids=tuple(f.frame_id for f in kept),
            kept_frames=tuple(f.pixels for f in kept),
        )
        return batch
