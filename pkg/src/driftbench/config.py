"""Run configuration: a flat ``key = value`` text format and its schema.

Example::

    dataset.preset = abrupt-gaussian
    dataset.initial_labeled = 500
    approach = IKS, STUDD, BASELINE1
    detector.window = 100
    repetitions = 5
    seed = 0
    timeout_seconds = 3600

``approach`` may list several approaches; each becomes its own run
configuration. ``#`` starts a comment when it begins a line or follows
whitespace.
"""
from __future__ import annotations

import enum
import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Union


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class Approach(enum.Enum):
    IKS = "IKS"
    STUDD = "STUDD"
    SAND = "SAND"
    PINAGE = "PINAGE"
    BASELINE1 = "BASELINE1"
    BASELINE2 = "BASELINE2"
    ORACLE = "ORACLE"
    NULL = "NULL"


class Handling(enum.Enum):
    REPLACE_MODEL = "ReplaceModelWithRequestedLabels"
    PSEUDO_LABELS = "RetrainWithPseudoLabels"
    NONE = "None"
    PERIODIC = "PeriodicRetrain"


class LabelScope(enum.Enum):
    DETECTION_WINDOW = "DetectionWindow"
    SINCE_LAST_DRIFT = "SinceLastDrift"


DEFAULT_HANDLING = {
    Approach.IKS: Handling.REPLACE_MODEL,
    Approach.STUDD: Handling.REPLACE_MODEL,
    Approach.SAND: Handling.REPLACE_MODEL,
    Approach.ORACLE: Handling.REPLACE_MODEL,
    Approach.PINAGE: Handling.PSEUDO_LABELS,
    Approach.BASELINE1: Handling.NONE,
    Approach.BASELINE2: Handling.PERIODIC,
    Approach.NULL: Handling.NONE,
}

ALLOWED_HANDLING = {
    Approach.PINAGE: {Handling.PSEUDO_LABELS},
    Approach.BASELINE1: {Handling.NONE},
    Approach.BASELINE2: {Handling.PERIODIC},
}

# detector.* keys: name -> (type, default, approaches that read it)
DETECTOR_KEYS: dict[str, tuple[type, object, tuple[str, ...]]] = {
    "window": (int, 100, ("IKS", "SAND")),
    "alpha": (float, 0.001, ("IKS",)),
    "feature_index": (int, 0, ("IKS",)),
    "tau": (float, 0.3, ("SAND",)),
    "min_segment": (int, 10, ("SAND",)),
    "gain_threshold": (float, None, ("SAND",)),
    "warning_level": (float, 0.95, ("STUDD", "PINAGE")),
    "drift_level": (float, 0.90, ("STUDD", "PINAGE")),
    "min_errors": (int, 30, ("STUDD", "PINAGE")),
    "members": (int, 10, ("PINAGE",)),
    "k_neighbors": (int, 7, ("PINAGE",)),
    "subspace": (float, 0.5, ("PINAGE",)),
    "validation_fraction": (float, 0.3, ("PINAGE",)),
}


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise ValueError("must be a positive integer")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise ValueError("must be positive")
    return v


def _enum_parser(enum_cls) -> Callable[[str], enum.Enum]:
    def parse(text: str):
        for member in enum_cls:
            if text.strip().lower() in (member.value.lower(), member.name.lower()):
                return member
        raise ValueError(f"expected one of {', '.join(m.value for m in enum_cls)}")
    return parse


TOP_KEYS: dict[str, Callable[[str], object]] = {
    "dataset.name": str,
    "dataset.path": str,
    "dataset.preset": str,
    "dataset.seed": int,
    "dataset.n_samples": _positive_int,
    "dataset.label_column": int,
    "dataset.class_count": _positive_int,
    "dataset.initial_labeled": _positive_int,
    "approach": str,
    "handling.strategy": _enum_parser(Handling),
    "handling.period": _positive_int,
    "handling.window": _positive_int,
    "handling.scope": _enum_parser(LabelScope),
    "repetitions": _positive_int,
    "repetition_seeds": str,
    "seed": int,
    "timeout_seconds": _positive_float,
}


def is_known_key(key: str) -> bool:
    if key in TOP_KEYS:
        return True
    return key.startswith("detector.") and key[len("detector."):] in DETECTOR_KEYS


_INLINE_COMMENT = re.compile(r"(^|\s)#.*$")


def parse_text(text: str, source: str = "<config>") -> dict[str, str]:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = _INLINE_COMMENT.sub("", line).strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}", "expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not is_known_key(key):
            raise ConfigError(key, "unknown configuration key")
        raw[key] = value
    return raw


def apply_overrides(raw: dict[str, str], overrides: Iterable[str]) -> dict[str, str]:
    out = dict(raw)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override must look like key=value")
        key, value = (s.strip() for s in item.split("=", 1))
        if not is_known_key(key):
            raise ConfigError(key, "unknown configuration key")
        out[key] = value
    return out


def render(raw: dict[str, str]) -> str:
    return "".join(f"{k} = {raw[k]}\n" for k in sorted(raw))


@dataclass
class DatasetConfig:
    name: str
    path: Optional[str] = None
    preset: Optional[str] = "abrupt-gaussian"
    seed: int = 0
    n_samples: Optional[int] = None
    label_column: int = -1
    class_count: Optional[int] = None
    initial_labeled: int = 500


@dataclass
class RunConfig:
    dataset: DatasetConfig
    approach: Approach
    detector: dict = field(default_factory=dict)
    handling: Handling = Handling.NONE
    period: Optional[int] = None
    handling_window: Optional[int] = None
    label_scope: LabelScope = LabelScope.DETECTION_WINDOW
    repetitions: int = 5
    seed: int = 0
    timeout: Optional[float] = None
    repetition_seeds: str = "fixed"
    raw: dict = field(default_factory=dict)

    def __post_init__(self):
        allowed = ALLOWED_HANDLING.get(self.approach)
        if allowed is not None and self.handling not in allowed:
            raise ConfigError("handling.strategy",
                              f"{self.approach.value} requires {' or '.join(h.value for h in allowed)}")
        if self.repetition_seeds not in ("fixed", "incrementing"):
            raise ConfigError("repetition_seeds", "expected 'fixed' or 'incrementing'")
        params = {k: v[1] for k, v in DETECTOR_KEYS.items()}
        params.update(self.detector)
        self.detector = params

    @property
    def window(self) -> int:
        """Label-request window used by model replacement."""
        return self.handling_window or int(self.detector["window"])

    def seed_for(self, repetition: int) -> int:
        return self.seed + repetition if self.repetition_seeds == "incrementing" else self.seed

    def text(self) -> str:
        return render(self.raw)

    def digest(self) -> str:
        return hashlib.sha256(self.text().encode()).hexdigest()[:16]


def _get(raw: dict, key: str, default=None):
    if key not in raw:
        return default
    try:
        return TOP_KEYS[key](raw[key])
    except ValueError as exc:
        raise ConfigError(key, f"invalid value {raw[key]!r}: {exc}") from None


def build_configs(raw: dict[str, str]) -> list[RunConfig]:
    """Expand a raw key/value mapping into one :class:`RunConfig` per approach."""
    for key in raw:
        if not is_known_key(key):
            raise ConfigError(key, "unknown configuration key")
    approaches = []
    for token in raw.get("approach", "").split(","):
        token = token.strip()
        if not token:
            continue
        try:
            approaches.append(Approach[token.upper()])
        except KeyError:
            raise ConfigError("approach", f"unknown approach {token!r}") from None
    if not approaches:
        raise ConfigError("approach", "at least one approach is required")

    detector = {}
    for name, (typ, _, _) in DETECTOR_KEYS.items():
        key = f"detector.{name}"
        if key in raw:
            try:
                detector[name] = typ(raw[key])
            except ValueError:
                raise ConfigError(key, f"invalid value {raw[key]!r}") from None
    for name in ("window", "min_segment", "members", "k_neighbors", "min_errors"):
        if name in detector and detector[name] < 1:
            raise ConfigError(f"detector.{name}", "must be positive")
    if "alpha" in detector and not 0 < detector["alpha"] < 1:
        raise ConfigError("detector.alpha", "must lie in (0, 1)")
    if "tau" in detector and not 0 < detector["tau"] < 1:
        raise ConfigError("detector.tau", "must lie in (0, 1)")

    seed = _get(raw, "seed", 0)
    path = _get(raw, "dataset.path")
    preset = _get(raw, "dataset.preset", None if path else "abrupt-gaussian")
    if path and "dataset.preset" in raw:
        raise ConfigError("dataset.preset", "give either dataset.path or dataset.preset")
    dataset = DatasetConfig(
        name=_get(raw, "dataset.name", Path(path).stem if path else preset),
        path=path,
        preset=preset,
        seed=_get(raw, "dataset.seed", seed),
        n_samples=_get(raw, "dataset.n_samples"),
        label_column=_get(raw, "dataset.label_column", -1),
        class_count=_get(raw, "dataset.class_count"),
        initial_labeled=_get(raw, "dataset.initial_labeled", 500),
    )

    configs = []
    for approach in approaches:
        handling = _get(raw, "handling.strategy", DEFAULT_HANDLING[approach])
        if len(approaches) > 1 and "handling.strategy" in raw and approach in ALLOWED_HANDLING:
            handling = DEFAULT_HANDLING[approach]
        run_raw = dict(raw)
        run_raw["approach"] = approach.value
        configs.append(RunConfig(
            dataset=dataset,
            approach=approach,
            detector=dict(detector),
            handling=handling,
            period=_get(raw, "handling.period"),
            handling_window=_get(raw, "handling.window"),
            label_scope=_get(raw, "handling.scope", LabelScope.DETECTION_WINDOW),
            repetitions=_get(raw, "repetitions", 5),
            seed=seed,
            timeout=_get(raw, "timeout_seconds"),
            repetition_seeds=raw.get("repetition_seeds", "fixed"),
            raw=run_raw,
        ))
    return configs


def load(path: Union[str, Path], overrides: Iterable[str] = ()) -> tuple[dict[str, str], list[RunConfig]]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(str(path), "configuration file not found")
    raw = apply_overrides(parse_text(path.read_text(), str(path)), overrides)
    return raw, build_configs(raw)
