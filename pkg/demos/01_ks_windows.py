"""
Two windows and a KS distance
=============================

A univariate stream whose mean jumps by three standard deviations at t=1000,
watched by the incremental KS detector.
"""

import numpy as np

from driftbench.detectors import IKS, ks_critical

rng = np.random.default_rng(0)
x = rng.normal(size=2000)
x[1000:] += 3.0

det = IKS(window=100, alpha=0.001)
print("critical distance for two windows of 100:", round(ks_critical(0.001, 100, 100), 4))

for t, value in enumerate(x):
    verdict = det.update([value])
    if verdict.is_drift:
        print(f"t={t}: drift, D={det.last_statistic:.3f}, detection window began at {verdict.position}")

# after a drift the reference window holds the post-change samples
print("reference mean now:", round(float(np.mean(det.ref.contents)), 2))
