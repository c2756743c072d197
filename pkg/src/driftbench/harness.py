"""The benchmark pipeline: untimed initial training, an instrumented
predict -> detect -> handle loop over the inference stream, and repetitions."""
from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from time import perf_counter
from typing import Optional, Sequence, Union

import numpy as np

from . import data
from .config import Approach, Handling, LabelScope, RunConfig
from .core import Verdict
from .detectors import EDDM, IKS, SAND, STUDD, Detector, NullDetector, OracleDetector, PinageDD
from .metrics import (AccuracyCounter, DriftEvent, LabelLedger, MemoryProbe, RunMetrics, Scope,
                      ScopedTimer)
from .models import Ensemble, GaussianNB, KMeansClassifier, choose_k

log = logging.getLogger(__name__)


class NBLearner:
    def __init__(self, class_count: int):
        self.class_count = class_count
        self.model: Optional[GaussianNB] = None

    def refit(self, X, y, rng=None) -> None:
        self.model = GaussianNB(self.class_count).fit(X, y)

    def predict(self, x):
        return self.model.predict(x)

    def predict_many(self, X):
        return self.model.predict_many(X)


class KMeansLearner:
    def __init__(self, class_count: int, seed: int):
        self.class_count = class_count
        self.seed = seed
        self.model: Optional[KMeansClassifier] = None

    def refit(self, X, y, rng=None) -> None:
        k = choose_k(len(X), self.class_count)
        self.model = KMeansClassifier(k, self.class_count, seed=self.seed).fit(X, y)

    def predict(self, x):
        return self.model.predict(x)


class EnsembleLearner:
    """Ensemble base model; retraining updates the members instead of replacing them."""

    def __init__(self, ensemble: Ensemble):
        self.model = ensemble

    def refit(self, X, y, rng) -> None:
        self.model.update(X, y, rng)

    def predict(self, x):
        return self.model.predict(x)


@dataclass
class Pipeline:
    """Mutable state of one run, shared with the drift handler."""

    config: RunConfig
    spec: data.StreamSpec
    inference: data.Stream
    learner: object
    detector: Detector
    ledger: LabelLedger
    rng: np.random.Generator
    events: list = field(default_factory=list)
    retrain_events: int = 0

    @property
    def offset(self) -> int:
        """Stream index of the first inference sample."""
        return self.spec.initial_labeled

    def retrain(self, positions, labels=None) -> None:
        """Refit the base model on inference samples (true labels unless given)."""
        positions = np.asarray(positions, dtype=np.int64)
        if len(positions) == 0:
            return
        X = self.inference.X[positions]
        y = self.inference.y[positions] if labels is None else labels
        self.learner.refit(X, y, self.rng)
        hook = getattr(self.detector, "on_model_replaced", None)
        if hook is not None:
            hook(self.learner.model, X)
        self.retrain_events += 1


def drift_event(p: Pipeline, i: int) -> DriftEvent:
    """The event logged for a drift at inference position ``i``, created if missing."""
    index = i + p.offset
    if not p.events or p.events[-1].index != index or p.events[-1].kind != "Drift":
        p.events.append(DriftEvent(index, "Drift"))
    return p.events[-1]


class NoHandling:
    def on_sample(self, p: Pipeline, i: int, verdict: Verdict) -> None:
        pass


class ReplaceModel:
    """Request true labels around a drift and replace the base model.

    With the detection-window scope the request covers ``window`` samples
    starting at the drift position; when part of that range is still in the
    future the retraining waits until it has been observed. With the
    since-last-drift scope every sample since the previous drift is used at
    once. Labels already revealed are reused, never requested again.
    """

    def __init__(self, window: int, scope: LabelScope):
        self.window = window
        self.scope = scope
        self.pending: Optional[tuple[int, int, DriftEvent]] = None
        self.last_drift = -1

    def _fulfil(self, p: Pipeline, lo: int, hi: int, event: DriftEvent) -> None:
        positions = np.arange(lo, hi + 1)
        event.labels_requested += p.ledger.request(p.ledger.unrevealed(positions))
        p.retrain(positions)

    def on_sample(self, p: Pipeline, i: int, verdict: Verdict) -> None:
        if verdict.is_drift:
            event = drift_event(p, i)
            if self.scope is LabelScope.SINCE_LAST_DRIFT:
                self.pending = None
                self._fulfil(p, self.last_drift + 1, i, event)
            else:
                lo = max(verdict.position - p.offset, 0)
                self.pending = (lo, lo + self.window - 1, event)
            self.last_drift = i
        if self.pending is not None and i >= self.pending[1]:
            lo, hi, event = self.pending
            self.pending = None
            self._fulfil(p, lo, hi, event)


class PseudoLabelRetrain:
    """Refit the ensemble on pseudo-labelled samples buffered by the detector."""

    def on_sample(self, p: Pipeline, i: int, verdict: Verdict) -> None:
        if not verdict.is_drift:
            return
        idx, labels = p.detector.pop_drift_buffer()
        if len(idx):
            p.retrain(idx - p.offset, labels)


class PeriodicRetrain:
    """Reveal every label after its prediction; refit on the last ``period`` samples
    each time ``period`` samples have passed."""

    def __init__(self, period: int):
        self.period = period

    def on_sample(self, p: Pipeline, i: int, verdict: Verdict) -> None:
        p.ledger.request(i)
        if (i + 1) % self.period == 0:
            positions = np.arange(i + 1 - self.period, i + 1)
            p.retrain(positions)
            p.events.append(DriftEvent(i + p.offset, "Retrain", self.period))


def load_stream(config: RunConfig) -> tuple[data.Stream, data.StreamSpec]:
    ds = config.dataset
    if ds.path:
        stream, spec = data.load_csv(ds.path, label_column=ds.label_column, class_count=ds.class_count,
                                     initial_labeled=ds.initial_labeled, name=ds.name)
    else:
        params = data.preset(ds.preset, ds.seed)
        if ds.n_samples is not None:
            params.n_samples = ds.n_samples
        stream, spec = data.generate_synthetic(params, name=ds.name, initial_labeled=ds.initial_labeled)
    if spec.initial_labeled >= len(stream):
        raise data.DataError(f"initial_labeled={spec.initial_labeled} exceeds stream length {len(stream)}")
    return stream, spec


def build_pipeline(config: RunConfig, stream: data.Stream, spec: data.StreamSpec, seed: int,
                   detector: Optional[Detector] = None) -> Pipeline:
    """Train the base model(s) on the labelled prefix and construct the detector."""
    train, inference = data.split_initial(stream, spec)
    rng = np.random.default_rng(seed)
    k = spec.class_count
    start = spec.initial_labeled
    p = config.detector
    a = config.approach

    if a is Approach.SAND:
        learner = KMeansLearner(k, seed)
        learner.refit(train.X, train.y)
    elif a is Approach.PINAGE:
        n_val = max(1, int(round(p["validation_fraction"] * len(train))))
        if n_val < p["k_neighbors"] or n_val >= len(train):
            raise ValueError("validation split too small for DCS-LA")
        cut = len(train) - n_val
        ens = Ensemble.bagged(train.X[:cut], train.y[:cut], train.X[cut:], train.y[cut:], k,
                              n_members=p["members"], subspace=p["subspace"],
                              k_neighbors=p["k_neighbors"], seed=seed)
        learner = EnsembleLearner(ens)
    else:
        learner = NBLearner(k)
        learner.refit(train.X, train.y)

    if detector is None:
        eddm = lambda: EDDM(p["warning_level"], p["drift_level"], p["min_errors"], start=start)
        if a is Approach.IKS:
            detector = IKS(p["window"], p["alpha"], p["feature_index"], d=spec.d, start=start)
        elif a is Approach.STUDD:
            detector = STUDD(STUDD.fit_student(learner.model, train.X, k), eddm(), start=start)
        elif a is Approach.SAND:
            detector = SAND(p["window"], p["tau"], p["min_segment"], p["gain_threshold"], start=start)
        elif a is Approach.PINAGE:
            detector = PinageDD(learner.model, eddm(), start=start, recent=config.window)
        elif a is Approach.ORACLE:
            detector = OracleDetector(spec.drift_truth, start=start)
        else:
            detector = NullDetector(start=start)

    return Pipeline(config, spec, inference, learner, detector, LabelLedger(len(inference)), rng)


def make_handler(config: RunConfig):
    h = config.handling
    if h is Handling.REPLACE_MODEL:
        return ReplaceModel(config.window, config.label_scope)
    if h is Handling.PSEUDO_LABELS:
        return PseudoLabelRetrain()
    if h is Handling.PERIODIC:
        return PeriodicRetrain(config.period or config.dataset.initial_labeled)
    return NoHandling()


@contextmanager
def pinned_to_one_core():
    """Restrict the process to a single logical core for the timed section."""
    get = getattr(os, "sched_getaffinity", None)
    set_ = getattr(os, "sched_setaffinity", None)
    if get is None or set_ is None:
        yield
        return
    before = get(0)
    try:
        set_(0, {min(before)})
    except OSError:
        yield
        return
    try:
        yield
    finally:
        set_(0, before)


def run_pipeline(config: RunConfig, *, repetition: int = 0,
                 stream: Optional[data.Stream] = None, spec: Optional[data.StreamSpec] = None,
                 detector: Optional[Detector] = None, handler=None) -> RunMetrics:
    """Execute one timed run.

    ``detector`` and ``handler`` replace the ones derived from ``config``; the
    stream may be passed in to skip loading. The timeout covers the whole run
    including loading and initial training, the runtimes only the stream loop.
    """
    t_begin = perf_counter()
    deadline = t_begin + config.timeout if config.timeout else float("inf")
    if stream is None:
        stream, spec = load_stream(config)
    seed = config.seed_for(repetition)
    p = build_pipeline(config, stream, spec, seed, detector)
    handler = handler if handler is not None else make_handler(config)
    probe = MemoryProbe()
    acc = AccuracyCounter()
    timer = ScopedTimer()

    X = p.inference.X
    y = p.inference.y
    predict = p.learner.predict
    observe = p.detector.observe
    hits = np.zeros(len(X), dtype=bool)
    detections = 0
    timed_out = False
    with pinned_to_one_core():
        timer.open(Scope.TOTAL)
        for i in range(len(X)):
            if perf_counter() > deadline:
                timed_out = True
                break
            x = X[i]
            pred, conf = predict(x)
            acc.update(pred, y[i])
            hits[i] = pred == y[i]
            timer.open(Scope.DETECTOR)
            verdict = observe(x, pred, conf)
            timer.close(Scope.DETECTOR)
            if verdict.is_drift:
                detections += 1
                drift_event(p, i)
            handler.on_sample(p, i, verdict)
            # handling may swap the model out
            predict = p.learner.predict
        timer.close(Scope.TOTAL)

    m_peak = probe.peak_mib()
    if timed_out:
        log.info("%s/%s timed out", config.dataset.name, config.approach.value)
        return RunMetrics.timeout(timer.total, timer.detector, m_peak)
    return RunMetrics.completed(
        timer.total, timer.detector, m_peak, acc.final(), detections, p.ledger.fraction(),
        retrain_events=p.retrain_events, events=p.events, hits=hits,
    )


def handle_drift(handler, pipeline: Pipeline, i: int, verdict: Verdict) -> int:
    """Apply ``handler`` for inference position ``i``; return the labels it requested."""
    before = pipeline.ledger.count
    handler.on_sample(pipeline, i, verdict)
    return pipeline.ledger.count - before


@dataclass
class RunRecord:
    config: RunConfig
    config_hash: str
    runs: list[RunMetrics]

    @property
    def events(self) -> list[DriftEvent]:
        return self.runs[0].events if self.runs else []

    @property
    def timed_out(self) -> bool:
        return any(r.timed_out for r in self.runs)


def run_repetitions(config: RunConfig, repetitions: Optional[int] = None) -> RunRecord:
    reps = repetitions if repetitions is not None else config.repetitions
    if reps < 1:
        raise ValueError("at least one repetition is required")
    stream, spec = load_stream(config)
    runs = []
    for r in range(reps):
        m = run_pipeline(config, repetition=r, stream=stream, spec=spec)
        runs.append(m)
        if m.timed_out:
            break
    return RunRecord(config, config.digest(), runs)


def run_suite(configs: Sequence[RunConfig], repetitions: Optional[int] = None,
              parallel_processes: int = 1) -> list[RunRecord]:
    """Run every configuration ``repetitions`` times; results keep config order.

    With ``parallel_processes > 1`` configurations are spread over worker
    processes; each timed loop still runs single-threaded.
    """
    if not configs:
        raise ValueError("no configurations to run")
    if parallel_processes > 1:
        with ProcessPoolExecutor(parallel_processes) as pool:
            return list(pool.map(run_repetitions, configs, [repetitions] * len(configs)))
    return [run_repetitions(c, repetitions) for c in configs]


def write_event_log(record: RunRecord, path: Union[str, Path]) -> Path:
    """Tab-separated drift events of the first repetition: index, kind, labels_requested."""
    path = Path(path)
    path.write_text("".join(f"{e.index}\t{e.kind}\t{e.labels_requested}\n" for e in record.events))
    return path


def read_event_log(path: Union[str, Path]) -> list[DriftEvent]:
    out = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            idx, kind, n = line.split("\t")
            out.append(DriftEvent(int(idx), kind, int(n)))
    return out
