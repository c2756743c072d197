from __future__ import annotations

from collections import deque
from typing import Optional

import numpy as np

from ..core import Verdict
from ..models import Ensemble, dcsla_select
from .base import Detector
from .eddm import EDDM


class PinageDD(Detector):
    """Pseudo-error monitoring of an ensemble (DCS-LA + EDDM).

    For every sample the member with the best local accuracy on the
    validation pool supplies a pseudo-label. A pseudo-error is a disagreement
    between the ensemble's majority vote and that pseudo-label; the error
    stream feeds EDDM. Pseudo-labelled samples are buffered from the first
    warning until the drift (or until the warning clears) so the ensemble can
    be retrained without true labels.

    :param recent: size of the fallback buffer used when a drift arrives
        without a preceding warning
    """

    name = "PINAGE"

    def __init__(self, ensemble: Ensemble, inner: Optional[EDDM] = None, start: int = 0,
                 recent: int = 100):
        super().__init__(start)
        self.ensemble = ensemble
        self.inner = inner if inner is not None else EDDM(start=start)
        self.inner.start = start
        self.warning_buffer: list[tuple[int, int]] = []
        self.recent: deque[tuple[int, int]] = deque(maxlen=recent)
        self.drift_buffer: list[tuple[int, int]] = []
        self.last_pseudo_label: Optional[int] = None
        self.last_pseudo_error: Optional[bool] = None

    def reset(self) -> None:
        self.inner.reset()
        self.warning_buffer = []
        self.recent.clear()

    def update(self, x, ensemble_pred: Optional[int] = None) -> tuple[int, Verdict]:
        t = self.index
        self.t += 1
        sel = dcsla_select(self.ensemble, x)
        pseudo = self.ensemble.members[sel].predict(x)[0]
        if ensemble_pred is None:
            ensemble_pred = self.ensemble.predict(x)[0]
        err = int(ensemble_pred) != pseudo
        verdict = self.inner.update(err)

        self.last_pseudo_label = pseudo
        self.last_pseudo_error = err
        self.recent.append((t, pseudo))
        if verdict.is_warning or verdict.is_drift:
            self.warning_buffer.append((t, pseudo))
        elif self.warning_buffer:
            self.warning_buffer = []
        if verdict.is_drift:
            self.drift_buffer = self.warning_buffer or list(self.recent)
            self.warning_buffer = []
            self.recent.clear()
        return pseudo, verdict

    def pop_drift_buffer(self) -> tuple[np.ndarray, np.ndarray]:
        """Stream indices and pseudo-labels collected for the last drift."""
        buf, self.drift_buffer = self.drift_buffer, []
        if not buf:
            return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
        idx, lab = zip(*buf)
        return np.array(idx, dtype=np.int64), np.array(lab, dtype=np.int64)

    def observe(self, x, prediction, confidence) -> Verdict:
        return self.update(x, prediction)[1]
