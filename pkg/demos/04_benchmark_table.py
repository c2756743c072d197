"""
A small benchmark table
=======================

Every approach on the abrupt Gaussian preset (5325 x 50, five classes,
one drift at 2500), one repetition each.
"""

from driftbench.config import build_configs, parse_text, render
from driftbench.harness import run_suite
from driftbench.report import build_report, emit

raw = parse_text("""
dataset.preset = abrupt-gaussian
approach = IKS, STUDD, SAND, PINAGE, BASELINE1, BASELINE2, ORACLE
repetitions = 1
seed = 0
""")

records = run_suite(build_configs(raw))
print(emit(build_report(records), "markdown", render(raw)))

# the drift log of the oracle run
oracle = records[-1]
print([(e.index, e.labels_requested) for e in oracle.events])
