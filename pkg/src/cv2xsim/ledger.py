"""Sliding-window record of per-resource channel observations.

One row per transmission period, at most `window_periods` rows retained
(oldest evicted first). A row bit u_j = 1 means resource j carried a
decodable transmission that period (or any transmission at all, when the
scenario senses raw occupancy). Targets and attackers in a fully connected
network observe the same channel, so a single ledger instance may back every
agent of a replication.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np


class UsageLedger:
    def __init__(self, window_periods: int, num_resources: int):
        if window_periods < 1:
            raise ValueError("window_periods must be at least 1")
        self.window_periods = window_periods
        self.num_resources = num_resources
        self._ring = np.zeros((window_periods, num_resources), dtype=np.uint8)
        self._usage = np.zeros(num_resources, dtype=np.int64)
        self._head = 0
        self._filled = 0

    @property
    def period_count(self) -> int:
        """Number of rows currently retained."""
        return self._filled

    def record_period(self, used: Iterable[int]) -> None:
        """Append one observation row, evicting the oldest beyond the window."""
        if self._filled == self.window_periods:
            row = self._ring[self._head]
            self._usage -= row
            row[:] = 0
        else:
            self._filled += 1
        for j in used:
            if self._ring[self._head, j] == 0:
                self._ring[self._head, j] = 1
                self._usage[j] += 1
        self._head = (self._head + 1) % self.window_periods

    def usage_total(self, j: int) -> int:
        """Total periods within the window in which resource j was observed."""
        return int(self._usage[j])

    def usage_vector(self) -> np.ndarray:
        """Per-resource observation counts over the retained window (copy)."""
        return self._usage.copy()

    def column_sums(self) -> np.ndarray:
        """Recompute usage from raw rows; equals usage_vector by construction."""
        return self._ring.sum(axis=0, dtype=np.int64)
