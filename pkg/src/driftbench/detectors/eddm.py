from __future__ import annotations

import math

from ..core import NO_DRIFT, WARNING, Verdict, drift_at
from .base import Detector


class EDDM(Detector):
    """Early drift detection over a binary error stream.

    Tracks the running mean and standard deviation of the distance (in
    samples) between consecutive errors. Their ``mean + 2*std`` is compared
    with the largest value seen since the last reset; falling below
    ``warning_level`` of it signals a warning, below ``drift_level`` a drift.
    No verdict other than NoDrift is issued before ``min_errors`` errors.

    Between error events the current zone is repeated, so a warning persists
    until an error event brings the ratio back above ``warning_level``.
    """

    name = "EDDM"

    def __init__(self, warning_level: float = 0.95, drift_level: float = 0.90,
                 min_errors: int = 30, start: int = 0):
        super().__init__(start)
        if not 0 < drift_level < warning_level <= 1:
            raise ValueError("need 0 < drift_level < warning_level <= 1")
        self.warning_level = warning_level
        self.drift_level = drift_level
        self.min_errors = int(min_errors)
        self.reset()

    def reset(self) -> None:
        self.n = 0
        self.errors = 0
        self.last_error = 0
        self.mean = 0.0
        self.m2 = 0.0
        self.max_level = 0.0
        self.in_warning = False

    @property
    def std(self) -> float:
        return math.sqrt(self.m2 / self.errors) if self.errors else 0.0

    def update(self, is_error: bool) -> Verdict:
        t = self.index
        self.t += 1
        self.n += 1
        if not is_error:
            return WARNING if self.in_warning else NO_DRIFT

        self.errors += 1
        dist = self.n - self.last_error
        self.last_error = self.n
        delta = dist - self.mean
        self.mean += delta / self.errors
        self.m2 += delta * (dist - self.mean)
        level = self.mean + 2.0 * self.std
        if level > self.max_level:
            self.max_level = level

        if self.errors < self.min_errors:
            return NO_DRIFT
        q = level / self.max_level
        if q < self.drift_level:
            self.reset()
            return drift_at(t)
        self.in_warning = q < self.warning_level
        return WARNING if self.in_warning else NO_DRIFT

    def observe(self, x, prediction, confidence) -> Verdict:
        raise TypeError("EDDM consumes an error stream; wrap it in a detector that produces errors")


def eddm_update(state: EDDM, is_error: bool) -> Verdict:
    return state.update(is_error)
