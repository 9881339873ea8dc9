"""Core domain types and the detector contract.

A detector is any object with ``fit(train, cfg) -> FittedDetector`` and
``score(fitted, test) -> ScoreSeries``.  Scores follow one orientation
everywhere: higher means more anomalous.  Detectors whose natural output
inverts (e.g. one-class SVM decision values) negate internally.

Two window layouts exist:

* :func:`frame` pairs each window with the observation that follows it
  (forecasting layout: ``windows[i] = values[t-w : t]``, target ``values[t]``).
* :func:`subsequences` makes plain sliding subsequences whose last element
  *is* the indexed observation (shape layout used by the clustering/density
  detectors, which assign a window's score to its final timestamp).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, SeriesTooShort

__all__ = [
    "TimeSeries",
    "WindowFrame",
    "ScoreSeries",
    "Threshold",
    "DetectorConfig",
    "FittedDetector",
    "frame",
    "subsequences",
    "binarize",
]


def _as_float_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """Equidistant real-valued observations with optional binary anomaly labels.

    Observations are indexed by position only; no timestamp column is kept.
    """

    values: np.ndarray
    labels: Optional[np.ndarray] = None
    series_id: str = ""
    period_hint: Optional[int] = None

    def __post_init__(self):
        values = _as_float_array(self.values, "values")
        if values.size == 0:
            raise SeriesTooShort("a time series must contain at least one observation")
        if not np.all(np.isfinite(values)):
            raise ValueError(f"series {self.series_id!r} contains non-finite values")
        object.__setattr__(self, "values", values)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int64)
            if labels.shape != values.shape:
                raise DimensionMismatch(
                    f"labels length {labels.size} != values length {values.size}"
                )
            if not np.all((labels == 0) | (labels == 1)):
                raise ValueError("labels must be 0 or 1")
            object.__setattr__(self, "labels", labels)
        if self.period_hint is not None and self.period_hint < 1:
            raise ValueError("period_hint must be a positive integer")

    def __len__(self) -> int:
        return int(self.values.size)

    def segment(self, start: int, stop: int, suffix: str = "") -> "TimeSeries":
        """Contiguous sub-series [start:stop), labels carried through."""
        return TimeSeries(
            values=self.values[start:stop],
            labels=None if self.labels is None else self.labels[start:stop],
            series_id=self.series_id + suffix,
            period_hint=self.period_hint,
        )

    def with_values(self, values: np.ndarray, labels: Optional[np.ndarray] = None) -> "TimeSeries":
        return TimeSeries(
            values=values,
            labels=self.labels if labels is None else labels,
            series_id=self.series_id,
            period_hint=self.period_hint,
        )

    @property
    def anomaly_count(self) -> int:
        return 0 if self.labels is None else int(self.labels.sum())


@dataclass(frozen=True)
class WindowFrame:
    """Matrix of width-w sliding subsequences with aligned per-window indices.

    ``target_indices`` locate each window in the source series; ``targets``
    hold the observation at that index.  In the forecasting layout the window
    ends just before its target, in the subsequence layout the target is the
    window's own last element.
    """

    windows: np.ndarray
    targets: np.ndarray
    target_indices: np.ndarray
    width: int
    stride: int = 1

    def __post_init__(self):
        windows = np.asarray(self.windows, dtype=np.float64)
        targets = _as_float_array(self.targets, "targets")
        indices = np.asarray(self.target_indices, dtype=np.int64)
        if windows.ndim != 2 or windows.shape[1] != self.width:
            raise DimensionMismatch(
                f"windows must have shape (m, {self.width}), got {windows.shape}"
            )
        if not (windows.shape[0] == targets.size == indices.size):
            raise DimensionMismatch("windows, targets and target_indices must align")
        if indices.size > 1 and not np.all(np.diff(indices) > 0):
            raise ValueError("target_indices must be strictly increasing")
        if self.width < 1 or self.stride < 1:
            raise ValueError("width and stride must be >= 1")
        object.__setattr__(self, "windows", windows)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "target_indices", indices)

    def __len__(self) -> int:
        return int(self.targets.size)


@dataclass(frozen=True)
class ScoreSeries:
    """Per-timestamp anomaly scores; higher means more anomalous.

    ``indices`` point into the evaluated series and are strictly increasing.
    Detectors that need a full window before they can score simply omit the
    leading indices.
    """

    scores: np.ndarray
    indices: np.ndarray
    detector_name: str

    def __post_init__(self):
        scores = _as_float_array(self.scores, "scores")
        indices = np.asarray(self.indices, dtype=np.int64)
        if scores.size != indices.size:
            raise DimensionMismatch("scores and indices must have equal length")
        if not np.all(np.isfinite(scores)):
            raise ValueError(f"{self.detector_name}: scores contain non-finite values")
        if indices.size > 1 and not np.all(np.diff(indices) > 0):
            raise ValueError("indices must be strictly increasing")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "indices", indices)

    def __len__(self) -> int:
        return int(self.scores.size)


@dataclass(frozen=True)
class Threshold:
    delta: float

    def __post_init__(self):
        if not np.isfinite(self.delta):
            raise ValueError("threshold must be finite")


@dataclass(frozen=True)
class DetectorConfig:
    """Name, window width, free-form hyperparameters and RNG seed.

    Every hyperparameter key is documented by the detector that consumes it;
    unknown keys are rejected at fit time.
    """

    name: str
    window_width: int = 30
    hyperparameters: Mapping[str, object] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.window_width < 1:
            raise ValueError("window_width must be >= 1")
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        object.__setattr__(self, "hyperparameters", dict(self.hyperparameters))

    def param(self, key: str, default=None):
        return self.hyperparameters.get(key, default)

    def fingerprint(self) -> str:
        """Stable digest of the full configuration."""
        payload = json.dumps(
            {
                "name": self.name,
                "window_width": self.window_width,
                "hyperparameters": {k: repr(v) for k, v in sorted(self.hyperparameters.items())},
                "seed": int(self.seed),
            },
            sort_keys=True,
        )
        return hashlib.blake2b(payload.encode(), digest_size=8).hexdigest()


@dataclass(frozen=True)
class FittedDetector:
    """Opaque trained state of one detector plus its config fingerprint."""

    name: str
    config: DetectorConfig
    state: object
    fingerprint: str

    @classmethod
    def wrap(cls, config: DetectorConfig, state: object) -> "FittedDetector":
        return cls(name=config.name, config=config, state=state, fingerprint=config.fingerprint())


def frame(series: TimeSeries, width: int, stride: int = 1) -> WindowFrame:
    """Sliding windows paired with the observation immediately after each.

    Window i covers ``values[t_i - width : t_i]`` and its target is
    ``values[t_i]`` with ``t_i = width + i * stride``, so the frame holds
    ``floor((n - width - 1) / stride) + 1`` rows.
    """
    if width < 1 or stride < 1:
        raise ValueError("width and stride must be >= 1")
    values = series.values
    n = values.size
    if n <= width:
        raise SeriesTooShort(f"need more than width={width} observations, got {n}")
    target_indices = np.arange(width, n, stride, dtype=np.int64)
    windows = np.lib.stride_tricks.sliding_window_view(values, width)[target_indices - width]
    return WindowFrame(
        windows=windows.copy(),
        targets=values[target_indices],
        target_indices=target_indices,
        width=width,
        stride=stride,
    )


def subsequences(series: TimeSeries, width: int, stride: int = 1) -> WindowFrame:
    """Plain sliding subsequences; each window's index is its last element.

    Window i covers ``values[t_i - width + 1 : t_i + 1]`` with
    ``t_i = width - 1 + i * stride``, so a score computed from the window can
    be assigned to the window's final timestamp.
    """
    if width < 1 or stride < 1:
        raise ValueError("width and stride must be >= 1")
    values = series.values
    n = values.size
    if n < width:
        raise SeriesTooShort(f"need at least width={width} observations, got {n}")
    target_indices = np.arange(width - 1, n, stride, dtype=np.int64)
    windows = np.lib.stride_tricks.sliding_window_view(values, width)[target_indices - width + 1]
    return WindowFrame(
        windows=windows.copy(),
        targets=values[target_indices],
        target_indices=target_indices,
        width=width,
        stride=stride,
    )


def binarize(scores: ScoreSeries, delta: Threshold) -> np.ndarray:
    """Mark every score strictly greater than ``delta`` as anomalous (1)."""
    return (scores.scores > delta.delta).astype(np.int64)
