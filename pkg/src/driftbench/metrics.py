"""Runtime instrumentation and the benchmark's derived metrics."""
from __future__ import annotations

import enum
import sys
from contextlib import contextmanager
from dataclasses import dataclass, field
from time import perf_counter_ns
from typing import Optional

import numpy as np

MIB = 1024 * 1024


class InstrumentationError(RuntimeError):
    """Raised when measurements violate their structural invariants."""


class Scope(enum.Enum):
    TOTAL = "Total"
    DETECTOR = "DetectorOnly"


class ScopedTimer:
    """Accumulates monotonic wall-clock time of two nested scopes.

    ``DETECTOR`` scopes may only be opened while ``TOTAL`` is open, so the
    detector time is structurally a subset of the total. The explicit
    :meth:`open`/:meth:`close` pair is what the stream loop uses; :meth:`scope`
    is the context-manager form.
    """

    __slots__ = ("_total_ns", "_det_ns", "_total_t0", "_det_t0", "_total_open", "_det_open")

    def __init__(self):
        self._total_ns = self._det_ns = 0
        self._total_t0 = self._det_t0 = 0
        self._total_open = self._det_open = False

    @property
    def open_depth(self) -> int:
        return int(self._total_open) + int(self._det_open)

    def open(self, scope: Scope) -> None:
        if scope is Scope.DETECTOR:
            if self._det_open:
                raise InstrumentationError("DetectorOnly scope opened twice")
            if not self._total_open:
                raise InstrumentationError("DetectorOnly scope opened outside Total")
            self._det_open = True
            self._det_t0 = perf_counter_ns()
        else:
            if self._total_open:
                raise InstrumentationError("Total scope opened twice")
            self._total_open = True
            self._total_t0 = perf_counter_ns()

    def close(self, scope: Scope) -> None:
        now = perf_counter_ns()
        if scope is Scope.DETECTOR:
            if not self._det_open:
                raise InstrumentationError("unbalanced close of DetectorOnly")
            self._det_open = False
            self._det_ns += now - self._det_t0
        else:
            if not self._total_open or self._det_open:
                raise InstrumentationError("unbalanced close of Total")
            self._total_open = False
            self._total_ns += now - self._total_t0

    @contextmanager
    def scope(self, scope: Scope):
        self.open(scope)
        try:
            yield self
        finally:
            self.close(scope)

    def seconds(self, scope: Scope) -> float:
        return (self._det_ns if scope is Scope.DETECTOR else self._total_ns) / 1e9

    @property
    def total(self) -> float:
        return self.seconds(Scope.TOTAL)

    @property
    def detector(self) -> float:
        return self.seconds(Scope.DETECTOR)


def timer_scope(timer: ScopedTimer, scope: Scope, body, *args, **kwargs):
    """Run ``body(*args, **kwargs)`` inside ``scope`` and return its result."""
    timer.open(scope)
    try:
        return body(*args, **kwargs)
    finally:
        timer.close(scope)


class MemoryProbe:
    """Peak resident set size of the process.

    Reads ``ru_maxrss`` from ``getrusage``. The value is a process-lifetime
    high-water mark, so within one process it can only grow across runs.
    On platforms without the ``resource`` module the probe is unavailable
    and reports ``None``.
    """

    def __init__(self):
        try:
            import resource
        except ImportError:
            self._resource = None
        else:
            self._resource = resource
        self.peak_bytes = 0

    @property
    def available(self) -> bool:
        return self._resource is not None

    def sample(self) -> Optional[int]:
        if self._resource is None:
            return None
        rss = self._resource.getrusage(self._resource.RUSAGE_SELF).ru_maxrss
        # kilobytes on Linux, bytes on macOS
        value = rss if sys.platform == "darwin" else rss * 1024
        self.peak_bytes = max(self.peak_bytes, value)
        return self.peak_bytes

    def peak_mib(self) -> Optional[float]:
        if self.sample() is None:
            return None
        return self.peak_bytes / MIB


def rro(r_sum: float, r_dd: float) -> float:
    """Relative runtime overhead ``r_sum / (r_sum - r_dd)``."""
    if r_dd < 0:
        raise InstrumentationError("negative detector time")
    if r_dd >= r_sum:
        raise InstrumentationError("detector time exceeds total")
    return r_sum / (r_sum - r_dd)


class AccuracyCounter:
    def __init__(self):
        self.correct = 0
        self.total = 0

    def update(self, predicted: int, truth: int) -> "AccuracyCounter":
        self.total += 1
        self.correct += int(predicted == truth)
        return self

    def final(self) -> float:
        if self.total == 0:
            raise ValueError("accuracy of zero decisions")
        return self.correct / self.total


def accuracy_update(state: AccuracyCounter, predicted: int, truth: int) -> AccuracyCounter:
    return state.update(predicted, truth)


def accuracy_final(state: AccuracyCounter) -> float:
    return state.final()


class LabelLedger:
    """Tracks which inference-stream labels have been revealed.

    Positions are relative to the inference stream (0 = first inference
    sample). Requesting a label twice is a harness bug and raises.
    """

    def __init__(self, stream_len: int):
        self.revealed = np.zeros(stream_len, dtype=bool)
        self.count = 0

    def __len__(self) -> int:
        return len(self.revealed)

    def request(self, positions) -> int:
        pos = np.atleast_1d(np.asarray(positions, dtype=np.int64))
        if len(pos) == 0:
            return 0
        if pos.min() < 0 or pos.max() >= len(self.revealed):
            raise InstrumentationError("label request outside the inference stream")
        if len(np.unique(pos)) != len(pos) or self.revealed[pos].any():
            raise InstrumentationError("label requested twice")
        self.revealed[pos] = True
        self.count += len(pos)
        return len(pos)

    def unrevealed(self, positions) -> np.ndarray:
        pos = np.asarray(positions, dtype=np.int64)
        return pos[~self.revealed[pos]]

    def fraction(self) -> float:
        return req_labels_final(self.count, len(self.revealed))


def req_labels_final(requested: int, stream_len: int) -> float:
    if stream_len <= 0:
        raise ValueError("empty inference stream")
    if not 0 <= requested <= stream_len:
        raise InstrumentationError("more labels requested than samples in the stream")
    return requested / stream_len


@dataclass
class DriftEvent:
    index: int
    kind: str
    labels_requested: int = 0


@dataclass
class RunMetrics:
    """Measurements of one pipeline run.

    Quality fields are ``None`` when the run timed out; ``m_peak`` is
    ``None`` when no memory probe is available.
    """

    r_sum: float
    r_dd: float
    rro: Optional[float]
    m_peak: Optional[float]
    accuracy: Optional[float]
    detections: Optional[int]
    req_labels: Optional[float]
    timed_out: bool = False
    retrain_events: int = 0
    events: list[DriftEvent] = field(default_factory=list)
    # per inference sample: prediction == truth
    hits: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    @classmethod
    def completed(cls, r_sum, r_dd, m_peak, accuracy, detections, req_labels, **kw) -> "RunMetrics":
        return cls(r_sum, r_dd, rro(r_sum, r_dd), m_peak, accuracy, detections, req_labels, **kw)

    @classmethod
    def timeout(cls, r_sum: float, r_dd: float, m_peak: Optional[float]) -> "RunMetrics":
        return cls(r_sum, r_dd, None, m_peak, None, None, None, timed_out=True)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__ if k not in ("events", "hits")}

    def segment_accuracy(self, lo: int, hi: int) -> float:
        """Accuracy over inference positions ``[lo, hi)``."""
        if self.hits is None:
            raise ValueError("no per-sample record for this run")
        seg = self.hits[lo:hi]
        if len(seg) == 0:
            raise ValueError("empty segment")
        return float(seg.mean())
