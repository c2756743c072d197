"""
Watching the gaps between errors
================================

EDDM tracks the distance between consecutive errors. When errors bunch up,
the mean distance falls relative to its best value so far.
"""

import numpy as np

from driftbench.detectors import EDDM

rng = np.random.default_rng(1)
errors = np.concatenate([rng.random(5000) < 0.01, rng.random(1500) < 0.2])

det = EDDM()
previous = None
for t, e in enumerate(errors):
    kind = det.update(bool(e)).kind
    if kind != previous:
        print(t, kind.value)
        previous = kind
# with only 1% errors a short unlucky run of close errors can already look
# like drift; the burst after 5000 is detected within a few dozen samples

# the same detector, fed with disagreements between a model and its mimic,
# is what STUDD uses; no true labels are involved
from driftbench.detectors import STUDD
from driftbench.models import GaussianNB

y = rng.integers(0, 2, 600)
X = rng.normal(size=(600, 2)) + np.where(y[:, None] == 1, 3.0, -3.0)
teacher = GaussianNB(2).fit(X, y)
studd = STUDD.from_teacher(teacher, X, 2)

Z = rng.normal(size=(3000, 2)) * 3
for t, z in enumerate(Z):
    pred = teacher.predict(z)[0]
    if t >= 1500 and z[1] > 0:
        pred = 1 - pred  # the teacher changes its mind in one region
    if studd.update(z, pred).is_drift:
        print(f"STUDD: drift at {t} (teacher changed at 1500)")
        break
