from __future__ import annotations

import numpy as np

from ..core import NO_DRIFT, SlidingWindow, Verdict, drift_at
from .base import Detector
from .ks import ks_critical, ks_statistic


class IKS(Detector):
    """Reference/detection window KS test on a single input feature.

    The first ``window`` values fill the reference window, the following ones
    slide through the detection window. Once both are full every sample
    triggers a test. On drift the reference window takes over the detection
    window's contents and the detection window starts empty, so the next test
    happens ``window`` samples later.

    The reported drift position is the oldest sample in the detection window.

    :param window: capacity of both windows
    :param alpha: significance level of the test
    :param feature_index: monitored input dimension
    :param d: expected dimensionality, checked when given
    """

    name = "IKS"

    def __init__(self, window: int = 100, alpha: float = 0.001, feature_index: int = 0,
                 d: int | None = None, start: int = 0):
        super().__init__(start)
        self.window = int(window)
        self.alpha = alpha
        self.feature_index = int(feature_index)
        self.d = d
        self.threshold = ks_critical(alpha, self.window, self.window)
        if d is not None and not 0 <= self.feature_index < d:
            raise ValueError(f"feature_index {feature_index} outside dimensionality {d}")
        self.ref = SlidingWindow(self.window)
        self.det = SlidingWindow(self.window)
        self.last_statistic: float | None = None

    def reset(self) -> None:
        self.ref.clear()
        self.det.clear()
        self.last_statistic = None

    def update(self, x) -> Verdict:
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or (self.d is not None and x.shape[0] != self.d) or x.shape[0] <= self.feature_index:
            raise ValueError(f"dimensionality mismatch: got shape {x.shape}")
        value = x[self.feature_index]
        t = self.index
        self.t += 1
        if not self.ref.full:
            self.ref.push(value)
            return NO_DRIFT
        self.det.push(value)
        if not self.det.full:
            return NO_DRIFT
        self.last_statistic = ks_statistic(self.ref, self.det)
        if self.last_statistic > self.threshold:
            contents = self.det.contents
            self.ref.clear()
            self.ref.extend(contents)
            self.det.clear()
            return drift_at(t - self.window + 1)
        return NO_DRIFT

    def observe(self, x, prediction, confidence) -> Verdict:
        return self.update(x)
