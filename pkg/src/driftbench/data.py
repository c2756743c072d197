"""Dataset ingestion, synthetic drift streams and the initial train/inference split."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Sequence, Union

import numpy as np

from .core import LabeledSample, Sample


class DataError(ValueError):
    pass


@dataclass
class Stream:
    """A labelled stream held as a feature matrix and a label vector.

    Iterating yields :class:`LabeledSample` objects; ``X[i]``/``y[i]`` is the
    cheap path used by the harness.
    """

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=float)
        self.y = np.ascontiguousarray(self.y, dtype=np.int64)
        if self.X.ndim != 2 or self.y.shape != (self.X.shape[0],):
            raise DataError("X must be (n, d) and y must be (n,)")

    def __len__(self) -> int:
        return self.X.shape[0]

    def __iter__(self) -> Iterator[LabeledSample]:
        for i in range(len(self)):
            yield self[i]

    def __getitem__(self, i: int) -> LabeledSample:
        return LabeledSample(Sample(int(i), self.X[i]), int(self.y[i]))

    @property
    def d(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class CsvSource:
    path: str


@dataclass
class Concept:
    """Class-conditional Gaussians: ``means`` and ``stds`` have shape (classes, d)."""

    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        self.means = np.atleast_2d(np.asarray(self.means, dtype=float))
        self.stds = np.broadcast_to(np.asarray(self.stds, dtype=float), self.means.shape).copy()
        if np.any(self.stds <= 0):
            raise DataError("concept standard deviations must be positive")


@dataclass
class SyntheticParams:
    n_samples: int
    concepts: list[Concept]
    drift_points: list[int] = field(default_factory=list)
    ramp_length: int = 0
    seed: int = 0
    class_priors: Optional[np.ndarray] = None

    @property
    def d(self) -> int:
        return self.concepts[0].means.shape[1]

    @property
    def class_count(self) -> int:
        return self.concepts[0].means.shape[0]

    def validate(self) -> None:
        if self.n_samples < 1:
            raise DataError("n_samples must be positive")
        if len(self.concepts) != len(self.drift_points) + 1:
            raise DataError("need exactly one more concept than drift points")
        shape = self.concepts[0].means.shape
        if any(c.means.shape != shape for c in self.concepts):
            raise DataError("all concepts must share (classes, d)")
        pts = list(self.drift_points)
        if any(not 0 < p < self.n_samples for p in pts):
            raise DataError("drift points must lie inside (0, n_samples)")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise DataError("drift points must be strictly increasing")
        if self.ramp_length < 0:
            raise DataError("ramp_length must be non-negative")
        bounds = pts + [self.n_samples]
        if pts and self.ramp_length >= min(b - a for a, b in zip(bounds, bounds[1:])):
            raise DataError("ramp_length must be shorter than the gap between drift points")
        if self.class_priors is not None:
            p = np.asarray(self.class_priors, dtype=float)
            if p.shape != (shape[0],) or np.any(p < 0) or not math.isclose(p.sum(), 1.0):
                raise DataError("class_priors must be a probability vector over classes")


SourceT = Union[CsvSource, SyntheticParams]


@dataclass
class StreamSpec:
    name: str
    source: SourceT
    d: int
    class_count: int
    initial_labeled: int
    drift_truth: list[int] = field(default_factory=list)
    n_samples: Optional[int] = None

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.drift_truth, self.drift_truth[1:])):
            raise DataError("drift_truth must be strictly increasing")


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _sidecar(path: Path) -> Path:
    return path.with_suffix(".drifts")


def read_drift_sidecar(path: Union[str, Path]) -> list[int]:
    side = _sidecar(Path(path))
    if not side.exists():
        return []
    return [int(line) for line in side.read_text().split() if line.strip()]


def load_csv(
    path: Union[str, Path],
    label_column: int = -1,
    class_count: Optional[int] = None,
    initial_labeled: int = 500,
    name: Optional[str] = None,
) -> tuple[Stream, StreamSpec]:
    """Read a comma-separated stream file.

    A single header row is detected when the first row has a non-numeric
    field outside the label column. Labels are re-mapped to ``0..k-1`` in
    order of first appearance. Drift annotations are read from a sibling
    ``.drifts`` file when one exists.

    :param label_column: index of the label field, negative counts from the end
    :param class_count: declared number of classes; more distinct labels is an error
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise DataError("empty stream")
    width = len(rows[0])
    if width < 2:
        raise DataError("rows need at least one feature and a label")
    lab = label_column % width

    first = rows[0]
    if any(not _is_number(v) for j, v in enumerate(first) if j != lab):
        rows = rows[1:]
    if not rows:
        raise DataError("empty stream")

    mapping: dict[str, int] = {}
    X = np.empty((len(rows), width - 1))
    y = np.empty(len(rows), dtype=np.int64)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DataError(f"ragged row {i}: expected {width} fields, got {len(row)}")
        raw = row[lab].strip()
        if raw not in mapping:
            if class_count is not None and len(mapping) >= class_count:
                raise DataError(f"row {i}: label {raw!r} exceeds class_count={class_count}")
            mapping[raw] = len(mapping)
        y[i] = mapping[raw]
        feats = row[:lab] + row[lab + 1:]
        try:
            X[i] = [float(v) for v in feats]
        except ValueError:
            raise DataError(f"row {i}: non-numeric feature") from None
    if not np.all(np.isfinite(X)):
        raise DataError("non-finite feature values")

    stream = Stream(X, y)
    spec = StreamSpec(
        name=name or path.stem,
        source=CsvSource(str(path)),
        d=X.shape[1],
        class_count=class_count if class_count is not None else len(mapping),
        initial_labeled=initial_labeled,
        drift_truth=read_drift_sidecar(path),
        n_samples=len(stream),
    )
    return stream, spec


def write_csv(stream: Stream, path: Union[str, Path], drift_truth: Sequence[int] = ()) -> Path:
    """Write ``stream`` with a header row, plus a ``.drifts`` sidecar (one index per line)."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"f{j}" for j in range(stream.d)] + ["label"])
        for x, label in zip(stream.X, stream.y):
            w.writerow([repr(float(v)) for v in x] + [int(label)])
    _sidecar(path).write_text("".join(f"{int(i)}\n" for i in drift_truth))
    return path


def concept_schedule(params: SyntheticParams, rng: np.random.Generator) -> np.ndarray:
    """Index of the active concept for every sample.

    Uses one uniform draw per sample inside ramps and none elsewhere, so it
    must be called with the generator in the same state to reproduce a stream.
    """
    n = params.n_samples
    active = np.zeros(n, dtype=np.int64)
    u = rng.random(n)
    for c, p in enumerate(params.drift_points):
        ramp = params.ramp_length
        if ramp == 0:
            active[p:] = c + 1
            continue
        t = np.arange(p, n)
        prob_next = np.minimum((t - p + 1) / ramp, 1.0)
        take = u[p:] < prob_next
        active[p:][take] = c + 1
    return active


def generate_synthetic(params: SyntheticParams, name: str = "synthetic",
                       initial_labeled: int = 500) -> tuple[Stream, StreamSpec]:
    params.validate()
    rng = np.random.default_rng(params.seed)
    k = params.class_count
    priors = np.full(k, 1.0 / k) if params.class_priors is None else np.asarray(params.class_priors)

    y = rng.choice(k, size=params.n_samples, p=priors)
    active = concept_schedule(params, rng)
    noise = rng.standard_normal((params.n_samples, params.d))

    means = np.stack([c.means for c in params.concepts])
    stds = np.stack([c.stds for c in params.concepts])
    X = means[active, y] + stds[active, y] * noise

    stream = Stream(X, y)
    spec = StreamSpec(
        name=name,
        source=params,
        d=params.d,
        class_count=k,
        initial_labeled=initial_labeled,
        drift_truth=list(params.drift_points),
        n_samples=params.n_samples,
    )
    return stream, spec


def split_initial(stream: Stream, spec: StreamSpec) -> tuple[Stream, Stream]:
    """Split into the labelled training prefix and the inference remainder."""
    n0 = spec.initial_labeled
    if n0 < 1 or n0 >= len(stream):
        raise DataError(f"cannot take {n0} initial labels from a stream of {len(stream)}")
    return Stream(stream.X[:n0], stream.y[:n0]), Stream(stream.X[n0:], stream.y[n0:])


def gaussian_concepts(rng: np.random.Generator, class_count: int, d: int, spread: float,
                      n_concepts: int, shift: float) -> list[Concept]:
    """Random class means for the first concept; each later concept permutes
    the class means and moves every feature by ``shift``."""
    base = rng.normal(0.0, spread, size=(class_count, d))
    concepts = [Concept(base, 1.0)]
    for _ in range(n_concepts - 1):
        perm = np.roll(np.arange(class_count), 1)
        prev = concepts[-1].means
        concepts.append(Concept(prev[perm] + shift, 1.0))
    return concepts


def preset(name: str, seed: int = 0) -> SyntheticParams:
    """Named synthetic streams sized like the Insects data (5325 x 50, 5 classes)."""
    rng = np.random.default_rng(seed + 7919)
    if name == "abrupt-gaussian":
        return SyntheticParams(5325, gaussian_concepts(rng, 5, 50, 0.35, 2, 1.5),
                               drift_points=[2500], ramp_length=0, seed=seed)
    if name == "gradual-gaussian":
        return SyntheticParams(5325, gaussian_concepts(rng, 5, 50, 0.35, 2, 1.5),
                               drift_points=[2500], ramp_length=500, seed=seed)
    if name == "stationary-gaussian":
        return SyntheticParams(5325, gaussian_concepts(rng, 5, 50, 0.35, 1, 0.0), seed=seed)
    if name == "univariate-shift":
        return SyntheticParams(2000, [Concept([[0.0]], 1.0), Concept([[3.0]], 1.0)],
                               drift_points=[1000], seed=seed)
    raise DataError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")


PRESETS = ("abrupt-gaussian", "gradual-gaussian", "stationary-gaussian", "univariate-shift")
