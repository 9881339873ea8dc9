"""Ranking metrics (ROC/AUC, best F-score, NMM) and timed detector runs.

Labels are always restricted to the indices a detector actually scored;
detectors may omit a warm-up prefix and the metrics must not punish that.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import DetectorConfig, ScoreSeries, TimeSeries
from .errors import DegenerateLabels, NaiveZero, TsadError

__all__ = [
    "RocCurve",
    "EvalReport",
    "TimedRun",
    "roc_auc",
    "best_f1",
    "naive_mse",
    "nmm",
    "timed_run",
]


@dataclass(frozen=True)
class RocCurve:
    """Threshold sweep as (fpr, tpr) pairs from (0,0) to (1,1).

    ``thresholds[i]`` is the cut producing ``points[i]``; the initial point
    uses +inf (nothing predicted positive).
    """

    points: np.ndarray
    thresholds: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64)
        thresholds = np.asarray(self.thresholds, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] != 2:
            raise ValueError(f"points must have shape (k, 2), got {points.shape}")
        if thresholds.shape != (points.shape[0],):
            raise ValueError("thresholds must match points one-to-one")
        if np.any(points < -1e-12) or np.any(points > 1.0 + 1e-12):
            raise ValueError("fpr/tpr must lie in [0, 1]")
        if np.any(np.diff(points[:, 0]) < -1e-12) or np.any(np.diff(points[:, 1]) < -1e-12):
            raise ValueError("fpr and tpr must be non-decreasing along the sweep")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "thresholds", thresholds)

    @property
    def fpr(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def tpr(self) -> np.ndarray:
        return self.points[:, 1]


@dataclass(frozen=True)
class EvalReport:
    """Metrics and wall-clock seconds for one (detector, series) pair.

    ``failure`` is set instead of metrics when the detector raised; a report
    never carries both a failure and metric values.
    """

    auc: float
    best_f1: float
    best_f1_threshold: float
    nmm: float
    train_seconds: float
    inference_seconds: float
    n_scored: int
    n_anomalies: int
    failure: Optional[str] = None

    def __post_init__(self):
        if self.train_seconds < 0.0 or self.inference_seconds < 0.0:
            raise ValueError("timings must be non-negative")
        if self.failure is None:
            if not (0.0 <= self.auc <= 1.0 and 0.0 <= self.best_f1 <= 1.0):
                raise ValueError("auc and best_f1 must lie in [0, 1]")
            # Zero is legal: a detector may emit an all-zero score vector.
            if not self.nmm >= 0.0:
                raise ValueError("nmm must be non-negative")

    @property
    def ok(self) -> bool:
        return self.failure is None

    @property
    def total_seconds(self) -> float:
        return self.train_seconds + self.inference_seconds


@dataclass(frozen=True)
class TimedRun:
    """Outcome of one timed fit+score: the report plus plot-ready artifacts."""

    report: EvalReport
    curve: Optional[RocCurve] = None
    scores: Optional[ScoreSeries] = None


def _check_labels(labels: np.ndarray) -> tuple[int, int]:
    positives = int(labels.sum())
    negatives = int(labels.size - positives)
    if positives == 0 or negatives == 0:
        raise DegenerateLabels(
            f"need both classes among scored indices, got {positives} positives "
            f"and {negatives} negatives"
        )
    return positives, negatives


def roc_auc(scores: ScoreSeries, labels) -> tuple[RocCurve, float]:
    """Threshold sweep over unique score values; trapezoid area under it.

    Tied scores step tp and fp simultaneously, which makes the area equal to
    the Mann-Whitney statistic with half credit for ties.
    """
    labels = np.asarray(labels, dtype=np.int64)
    values = scores.scores
    if labels.shape != values.shape:
        raise ValueError("labels must align with scores")
    positives, negatives = _check_labels(labels)

    order = np.argsort(-values, kind="stable")
    sorted_scores = values[order]
    sorted_labels = labels[order]
    # One step per unique score value: indices of the last occurrence.
    last = np.nonzero(np.diff(sorted_scores))[0]
    step_ends = np.concatenate((last, [values.size - 1]))
    tp = np.cumsum(sorted_labels)[step_ends]
    fp = (step_ends + 1) - tp
    tpr = np.concatenate(([0.0], tp / positives))
    fpr = np.concatenate(([0.0], fp / negatives))
    thresholds = np.concatenate(([np.inf], sorted_scores[step_ends]))
    curve = RocCurve(points=np.column_stack((fpr, tpr)), thresholds=thresholds)
    auc = float(np.trapezoid(tpr, fpr))
    return curve, auc


def best_f1(scores: ScoreSeries, labels) -> tuple[float, float]:
    """Maximum F-score over candidate thresholds and the threshold achieving it.

    Candidates are the midpoints between consecutive unique scores plus one
    value below the minimum (the predict-everything cut).  Thresholds with
    zero predicted positives are skipped, precision is undefined there.
    """
    labels = np.asarray(labels, dtype=np.int64)
    values = scores.scores
    if labels.shape != values.shape:
        raise ValueError("labels must align with scores")
    positives = int(labels.sum())
    if positives == 0:
        raise DegenerateLabels("need at least one positive label for the F-score")

    unique = np.unique(values)
    candidates = np.concatenate(([unique[0] - 1.0], (unique[:-1] + unique[1:]) / 2.0))
    best_score = -1.0
    best_threshold = float(candidates[0])
    for threshold in candidates:
        predicted = values > threshold
        n_pred = int(predicted.sum())
        if n_pred == 0:
            continue
        tp = int((predicted & (labels == 1)).sum())
        precision = tp / n_pred
        recall = tp / positives
        f1 = 0.0 if tp == 0 else 2.0 * precision * recall / (precision + recall)
        if f1 > best_score:
            best_score = f1
            best_threshold = float(threshold)
    return best_score, best_threshold


def naive_mse(series: TimeSeries, indices=None) -> float:
    """MSE of the last-value forecast x̂_t = x_{t-1} over the given indices."""
    values = series.values
    if indices is None:
        indices = np.arange(1, values.size)
    indices = np.asarray(indices, dtype=np.int64)
    indices = indices[indices >= 1]
    if indices.size == 0:
        raise NaiveZero("no index has a predecessor to forecast from")
    errors = values[indices] - values[indices - 1]
    return float(np.mean(errors**2))


def nmm(model_mse: float, naive: float) -> float:
    """Ratio of model MSE to naive last-value MSE; < 1 beats persistence."""
    if not naive > 0.0:
        raise NaiveZero(f"naive MSE must be positive, got {naive}")
    return float(model_mse) / float(naive)


def timed_run(detector, cfg: DetectorConfig, train: TimeSeries, test: TimeSeries) -> TimedRun:
    """Fit and score under monotonic wall-clock timers, then evaluate.

    Detector and metric errors become a failure record in the report instead
    of aborting the caller's batch.  The run makes no internal concurrency;
    callers wanting meaningful timings must not run anything else in parallel.
    """
    t0 = time.perf_counter()
    try:
        fitted = detector.fit(train, cfg)
    except TsadError as exc:
        return TimedRun(report=_failure_report(exc, time.perf_counter() - t0, 0.0))
    train_seconds = time.perf_counter() - t0

    t1 = time.perf_counter()
    try:
        scores = detector.score(fitted, test)
    except TsadError as exc:
        return TimedRun(report=_failure_report(exc, train_seconds, time.perf_counter() - t1))
    inference_seconds = time.perf_counter() - t1

    try:
        if test.labels is None:
            raise DegenerateLabels("test segment has no labels")
        if len(scores) == 0:
            raise DegenerateLabels("detector produced no scores")
        labels = test.labels[scores.indices]
        curve, auc = roc_auc(scores, labels)
        f1, threshold = best_f1(scores, labels)
        model_mse = float(np.mean(scores.scores**2))
        ratio = nmm(model_mse, naive_mse(test, scores.indices))
    except TsadError as exc:
        return TimedRun(report=_failure_report(exc, train_seconds, inference_seconds))

    report = EvalReport(
        auc=auc,
        best_f1=f1,
        best_f1_threshold=threshold,
        nmm=ratio,
        train_seconds=train_seconds,
        inference_seconds=inference_seconds,
        n_scored=len(scores),
        n_anomalies=int(labels.sum()),
    )
    return TimedRun(report=report, curve=curve, scores=scores)


def _failure_report(exc: Exception, train_seconds: float, inference_seconds: float) -> EvalReport:
    return EvalReport(
        auc=float("nan"),
        best_f1=float("nan"),
        best_f1_threshold=float("nan"),
        nmm=float("nan"),
        train_seconds=train_seconds,
        inference_seconds=inference_seconds,
        n_scored=0,
        n_anomalies=0,
        failure=f"{type(exc).__name__}: {exc}",
    )
