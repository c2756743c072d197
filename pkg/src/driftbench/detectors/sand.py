from __future__ import annotations

import math
from collections import deque
from typing import Optional, Sequence

import numpy as np

from ..core import NO_DRIFT, Verdict, drift_at
from .base import Detector

VARIANCE_FLOOR = 1e-9


def bdcp_gains(confidences: Sequence[float], min_segment: int) -> tuple[np.ndarray, np.ndarray]:
    """Log-likelihood gain of splitting the sequence at each admissible index.

    Both segments are modelled as Gaussians with their own mean and a shared
    (pooled) variance, so the gain measures a mean shift:
    ``G(k) = n/2 * log(var_all / var_pooled(k))``.
    Returns the candidate split indices ``k`` (first index of the right
    segment) and their gains.
    """
    c = np.asarray(confidences, dtype=float)
    n = len(c)
    if min_segment < 1 or n < 2 * min_segment:
        raise ValueError(f"need at least {2 * min_segment} values, got {n}")
    ks = np.arange(min_segment, n - min_segment + 1)
    s1 = np.concatenate(([0.0], np.cumsum(c)))
    s2 = np.concatenate(([0.0], np.cumsum(c * c)))
    nl = ks.astype(float)
    nr = n - nl
    ss_left = s2[ks] - s1[ks] ** 2 / nl
    ss_right = (s2[n] - s2[ks]) - (s1[n] - s1[ks]) ** 2 / nr
    pooled = np.maximum((ss_left + ss_right) / n, VARIANCE_FLOOR)
    var_all = max(float(np.var(c)), VARIANCE_FLOOR)
    gains = 0.5 * n * np.log(var_all / pooled)
    return ks, np.maximum(gains, 0.0)


def bdcp_scan(confidences: Sequence[float], min_segment: int,
              gain_threshold: Optional[float] = None) -> Optional[int]:
    """Split index of a confidence drop, or ``None``.

    The best split is accepted only if its gain exceeds ``gain_threshold``
    (default ``2 ln n``) and the right segment's mean is below the left's.
    """
    c = np.asarray(confidences, dtype=float)
    n = len(c)
    ks, gains = bdcp_gains(c, min_segment)
    if gain_threshold is None:
        gain_threshold = 2.0 * math.log(n)
    best = int(np.argmax(gains))
    k = int(ks[best])
    if gains[best] > gain_threshold and c[k:].mean() < c[:k].mean():
        return k
    return None


class SAND(Detector):
    """Confidence-drop detection with a threshold gate in front of the scan.

    Confidences are kept in a FIFO window. The change-point scan runs only
    when the newest confidence is below ``tau`` and the window holds at least
    ``2 * min_segment`` values. A successful scan reports the first sample of
    the low-confidence segment and empties the window.
    """

    name = "SAND"

    def __init__(self, window: int = 100, tau: float = 0.3, min_segment: int = 10,
                 gain_threshold: Optional[float] = None, start: int = 0):
        super().__init__(start)
        if not 0 < tau < 1:
            raise ValueError("tau must lie in (0, 1)")
        if window < 2 * min_segment:
            raise ValueError("window must hold two minimum segments")
        self.window = int(window)
        self.tau = tau
        self.min_segment = int(min_segment)
        self.gain_threshold = gain_threshold
        self.conf = deque(maxlen=self.window)
        self.idx = deque(maxlen=self.window)
        self.scan_calls = 0

    def reset(self) -> None:
        self.conf.clear()
        self.idx.clear()

    def update(self, confidence: float) -> Verdict:
        confidence = float(confidence)
        if not 0.0 <= confidence <= 1.0:
            raise ValueError(f"confidence {confidence} outside [0, 1]")
        t = self.index
        self.t += 1
        self.conf.append(confidence)
        self.idx.append(t)
        if confidence >= self.tau or len(self.conf) < 2 * self.min_segment:
            return NO_DRIFT
        self.scan_calls += 1
        k = bdcp_scan(self.conf, self.min_segment, self.gain_threshold)
        if k is None:
            return NO_DRIFT
        position = self.idx[k]
        self.reset()
        return drift_at(position)

    def observe(self, x, prediction, confidence) -> Verdict:
        return self.update(confidence)
