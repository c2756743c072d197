"""Benchmark harness for unsupervised concept-drift detectors."""
from .core import LabeledSample, Sample, SlidingWindow, Verdict, VerdictKind
from .metrics import RunMetrics, rro
from .harness import RunRecord, run_pipeline, run_suite

__version__ = "0.1.0"
