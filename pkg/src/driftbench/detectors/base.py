from __future__ import annotations

from ..core import Verdict


class Detector:
    """Streaming interface shared by every detector.

    A detector sees one sample at a time through :meth:`observe` and returns
    exactly one verdict for it. Detectors count the samples they have seen and
    report drift positions in stream coordinates, starting at ``start``.
    """

    name = "detector"

    def __init__(self, start: int = 0):
        self.start = int(start)
        self.t = 0

    @property
    def index(self) -> int:
        """Stream index of the sample currently being processed."""
        return self.start + self.t

    def observe(self, x, prediction: int, confidence: float) -> Verdict:
        raise NotImplementedError

    def reset(self) -> None:
        """Re-initialise detection statistics (the sample counter keeps running)."""
