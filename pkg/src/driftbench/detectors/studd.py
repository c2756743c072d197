from __future__ import annotations

import numpy as np

from ..core import Verdict
from ..models import GaussianNB, NotFittedError
from .base import Detector
from .eddm import EDDM


class STUDD(Detector):
    """Student-teacher drift detection.

    A student model is trained to reproduce the teacher's predictions; the
    stream of student/teacher disagreements feeds an inner change detector
    (EDDM by default).
    """

    name = "STUDD"

    def __init__(self, student: GaussianNB, inner: EDDM | None = None, start: int = 0):
        super().__init__(start)
        self.student = student
        self.inner = inner if inner is not None else EDDM(start=start)
        self.inner.start = start

    @classmethod
    def from_teacher(cls, teacher, X, class_count: int, **kw) -> "STUDD":
        return cls(cls.fit_student(teacher, X, class_count), **kw)

    @staticmethod
    def fit_student(teacher, X, class_count: int) -> GaussianNB:
        X = np.asarray(X, dtype=float)
        return GaussianNB(class_count).fit(X, teacher.predict_many(X))

    def reset(self) -> None:
        self.inner.reset()

    def on_model_replaced(self, teacher, X) -> None:
        self.student = self.fit_student(teacher, X, self.student.class_count)
        self.inner.reset()

    def update(self, x, teacher_pred: int) -> Verdict:
        if not self.student.fitted:
            raise NotFittedError("STUDD student is not fitted")
        self.t += 1
        mimic_error = self.student.predict(x)[0] != int(teacher_pred)
        return self.inner.update(mimic_error)

    def observe(self, x, prediction, confidence) -> Verdict:
        return self.update(x, prediction)
