"""Data migration mode selection from smoothed write-buffer utilization.

Background migrations use copyback only while the trailing-window mean of the
buffer utilization u is above the threshold (default 50%, strict); urgent
(foreground) migrations use copyback unconditionally. The window tracks an
estimate of the average block write time: an EWMA (weight 0.2) of intervals
between consecutive host active-block fill-ups, seeded with
pages_per_block * t_prog.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from rcsim.epm import MODE_OFFCHIP, MODE_RCOPYBACK, URGENCY_FOREGROUND


@dataclass(frozen=True)
class ModeConfig:
    u_threshold: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.u_threshold < 1.0:
            raise ValueError(f"u_threshold must be in (0, 1), got {self.u_threshold}")


class UtilizationTracker:
    """Trailing-window mean of utilization samples with an adaptive window."""

    __slots__ = ("window_us", "ewma_weight", "_samples", "_sum", "_last_fill")

    def __init__(self, initial_window_us: int, ewma_weight: float = 0.2):
        self.window_us = max(1, int(initial_window_us))
        self.ewma_weight = ewma_weight
        self._samples = deque()
        self._sum = 0.0
        self._last_fill = None

    @property
    def smoothed_u(self) -> float:
        n = len(self._samples)
        if n == 0:
            return 0.0
        return self._sum / n

    def sample_count(self) -> int:
        return len(self._samples)

    def record_block_fill(self, t: int) -> None:
        """A host active block just filled; fold the interval into the window."""
        if self._last_fill is not None:
            interval = t - self._last_fill
            w = self.ewma_weight
            self.window_us = max(1, int(round((1.0 - w) * self.window_us + w * interval)))
        self._last_fill = t


def record_sample(tracker: UtilizationTracker, t: int, u: float) -> UtilizationTracker:
    """Append a utilization sample at time t; evict samples older than the window."""
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"utilization sample must be in [0, 1], got {u}")
    samples = tracker._samples
    samples.append((t, u))
    tracker._sum += u
    horizon = t - tracker.window_us
    while samples and samples[0][0] < horizon:
        _, old = samples.popleft()
        tracker._sum -= old
    return tracker


def select_mode(tracker: UtilizationTracker, cfg: ModeConfig, urgency: str) -> str:
    """Foreground: always copyback. Background: copyback iff smoothed u > threshold."""
    if urgency == URGENCY_FOREGROUND:
        return MODE_RCOPYBACK
    return MODE_RCOPYBACK if tracker.smoothed_u > cfg.u_threshold else MODE_OFFCHIP


def greedy_select_mode(urgency: str) -> str:
    """The comparison baseline: copyback whenever eligibility allows."""
    return MODE_RCOPYBACK
