"""
A change point in model confidence
==================================

SAND keeps the last 100 confidences and, when one falls below tau, looks for
the split that best explains the window as two Gaussian segments.
"""

import numpy as np

from driftbench.detectors import SAND, bdcp_gains

rng = np.random.default_rng(2)
conf = np.clip(np.concatenate([rng.normal(0.9, 0.03, 300), rng.normal(0.45, 0.05, 200)]), 0, 1)

ks, gains = bdcp_gains(conf[250:350], min_segment=10)
print("best split of samples 250..349:", 250 + int(ks[np.argmax(gains)]),
      "gain", round(float(gains.max()), 1), "threshold", round(2 * np.log(100), 1))

det = SAND(window=100, tau=0.7)
for t, c in enumerate(conf):
    v = det.update(c)
    if v.is_drift:
        print(f"t={t}: drift, change located at {v.position}; scans run: {det.scan_calls}")
        break

# one low value is not a change
det = SAND(window=100, tau=0.7)
blip = list(rng.normal(0.9, 0.01, 99)) + [0.3]
print("single dip triggers:", any(det.update(c).is_drift for c in blip))
