"""In-memory video container."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import StructureError

CHANNELS = 3


@dataclass
class VideoBuffer:
    """A clip as a (T, H, W, 3) float64 array, frame-major then row-major.

    Values are nominally in [0, 1]. Construction validates finiteness but does
    not clamp by itself: pipeline outputs and file writers clamp where their
    contracts say so, while raw field samples may legitimately overshoot.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 4 or arr.shape[3] != CHANNELS:
            raise StructureError(
                f"video data must have shape (T, H, W, {CHANNELS}), got {arr.shape}"
            )
        if arr.size == 0:
            raise StructureError(f"video must be nonempty, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise StructureError("video data contains non-finite values")
        self.data = np.ascontiguousarray(arr)

    @classmethod
    def from_array(cls, arr, clamp: bool = False) -> "VideoBuffer":
        arr = np.asarray(arr, dtype=np.float64)
        if clamp:
            arr = np.clip(arr, 0.0, 1.0)
        return cls(arr)

    @property
    def dims(self) -> tuple[int, int, int]:
        """(T, H, W)."""
        t, h, w, _ = self.data.shape
        return (t, h, w)

    def clamped(self) -> "VideoBuffer":
        return VideoBuffer(np.clip(self.data, 0.0, 1.0))
