"""Two-sample Kolmogorov-Smirnov statistic over sliding windows."""
from __future__ import annotations

import math

import numpy as np

from ..core import SlidingWindow


def _sorted(w) -> np.ndarray:
    if isinstance(w, SlidingWindow):
        return w.sorted_array()
    return np.sort(np.asarray(w, dtype=float))


def ks_statistic(ref, det) -> float:
    """Largest gap between the two empirical CDFs.

    Both CDFs only change at sample values, so evaluating them at every value
    of either window (right-continuous, ``<=``) finds the supremum. Accepts
    windows or plain sequences.
    """
    a = _sorted(ref)
    b = _sorted(det)
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        raise ValueError("KS statistic needs two non-empty windows")
    pts = np.concatenate((a, b))
    ca = np.searchsorted(a, pts, side="right")
    cb = np.searchsorted(b, pts, side="right")
    return float(np.max(np.abs(ca / n - cb / m)))


def ks_critical(alpha: float, n: int, m: int) -> float:
    """Asymptotic two-sample rejection threshold c(alpha) * sqrt((n+m)/(n*m))."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if n < 1 or m < 1:
        raise ValueError("window sizes must be positive")
    c = math.sqrt(-0.5 * math.log(alpha / 2))
    return c * math.sqrt((n + m) / (n * m))
