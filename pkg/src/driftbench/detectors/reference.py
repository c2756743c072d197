"""Reference detectors for calibrating the harness."""
from __future__ import annotations

from typing import Iterable

from ..core import NO_DRIFT, Verdict, drift_at
from .base import Detector


class NullDetector(Detector):
    name = "NULL"

    def observe(self, x, prediction, confidence) -> Verdict:
        self.t += 1
        return NO_DRIFT


class OracleDetector(Detector):
    """Emits Drift exactly at the annotated stream indices."""

    name = "ORACLE"

    def __init__(self, drift_truth: Iterable[int], start: int = 0):
        super().__init__(start)
        self.truth = frozenset(int(i) for i in drift_truth)

    def observe(self, x, prediction, confidence) -> Verdict:
        t = self.index
        self.t += 1
        return drift_at(t) if t in self.truth else NO_DRIFT
