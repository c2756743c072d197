"""Stream elements, detector verdicts and the sliding window used by IKS."""
from __future__ import annotations

import enum
import math
from bisect import bisect_right, insort
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np


@dataclass(frozen=True)
class Sample:
    index: int
    features: np.ndarray


@dataclass(frozen=True)
class LabeledSample:
    sample: Sample
    label: int

    @property
    def index(self) -> int:
        return self.sample.index

    @property
    def features(self) -> np.ndarray:
        return self.sample.features


class VerdictKind(enum.Enum):
    NO_DRIFT = "NoDrift"
    WARNING = "Warning"
    DRIFT = "Drift"


@dataclass(frozen=True)
class Verdict:
    """Per-sample detector output.

    ``position`` is the stream index the detector attributes the change to. It
    is only set for drift verdicts and never lies after the sample that caused
    the verdict.
    """

    kind: VerdictKind
    position: Optional[int] = None

    def __post_init__(self):
        if (self.kind is VerdictKind.DRIFT) != (self.position is not None):
            raise ValueError("position must be given iff kind is Drift")

    @property
    def is_drift(self) -> bool:
        return self.kind is VerdictKind.DRIFT

    @property
    def is_warning(self) -> bool:
        return self.kind is VerdictKind.WARNING


NO_DRIFT = Verdict(VerdictKind.NO_DRIFT)
WARNING = Verdict(VerdictKind.WARNING)


def drift_at(position: int) -> Verdict:
    return Verdict(VerdictKind.DRIFT, int(position))


class SlidingWindow:
    """Fixed-capacity FIFO of reals with a sorted view kept alongside.

    The sorted view is a plain list maintained by binary insertion and
    deletion. Insert/evict cost a memmove that is linear in the capacity, but
    ECDF queries are a single bisection, O(log w).

    :param capacity: maximum number of retained values (>= 1)
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self._fifo: deque[float] = deque()
        self._sorted: list[float] = []

    def __len__(self) -> int:
        return len(self._fifo)

    @property
    def full(self) -> bool:
        return len(self._fifo) == self.capacity

    @property
    def contents(self) -> list[float]:
        return list(self._fifo)

    @property
    def sorted_view(self) -> list[float]:
        return list(self._sorted)

    def push(self, x: float) -> Optional[float]:
        """Append ``x``; return the evicted oldest value if the window was full."""
        x = float(x)
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r} rejected")
        evicted = None
        if len(self._fifo) == self.capacity:
            evicted = self._fifo.popleft()
            del self._sorted[bisect_right(self._sorted, evicted) - 1]
        self._fifo.append(x)
        insort(self._sorted, x)
        return evicted

    def extend(self, values: Iterable[float]) -> None:
        for v in values:
            self.push(v)

    def clear(self) -> None:
        self._fifo.clear()
        self._sorted.clear()

    def count_le(self, x: float) -> int:
        return bisect_right(self._sorted, x)

    def ecdf(self, x: float) -> float:
        """Fraction of window elements ``<= x``."""
        if not self._fifo:
            raise ValueError("ECDF of an empty window")
        return bisect_right(self._sorted, x) / len(self._sorted)

    def sorted_array(self) -> np.ndarray:
        return np.fromiter(self._sorted, dtype=float, count=len(self._sorted))


def window_push(w: SlidingWindow, x: float) -> Optional[float]:
    return w.push(x)


def window_ecdf(w: SlidingWindow, x: float) -> float:
    return w.ecdf(x)
