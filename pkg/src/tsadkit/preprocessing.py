"""Chronological splitting, standardization and differencing.

All transforms are fitted on training data only and then applied unchanged
to later segments, preserving the causal ordering of a time series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import TimeSeries
from .errors import ConstantSeries, InvalidPeriod, PeriodTooLong, SeriesTooShort

__all__ = [
    "SplitSpec",
    "Split",
    "StandardizeParams",
    "split",
    "fit_standardizer",
    "standardize",
    "difference",
    "seasonal_difference",
]


@dataclass(frozen=True)
class SplitSpec:
    """Chronological train/validation/test ratios.

    The leading ``train_ratio`` share of the series is set aside for fitting;
    its trailing ``validation_of_train`` share becomes the validation segment.
    Everything after that head is the test segment.  Sizes are
    ``head = floor(train_ratio * n)``,
    ``train = floor((1 - validation_of_train) * head)``, ``val = head - train``,
    ``test = n - head``, so train+val+test == n always holds.
    """

    train_ratio: float = 0.3
    test_ratio: float = 0.7
    validation_of_train: float = 0.1

    def __post_init__(self):
        if not (0.0 < self.train_ratio < 1.0 and 0.0 < self.test_ratio < 1.0):
            raise ValueError("train_ratio and test_ratio must lie in (0, 1)")
        if abs(self.train_ratio + self.test_ratio - 1.0) > 1e-12:
            raise ValueError("train_ratio + test_ratio must equal 1")
        if not (0.0 <= self.validation_of_train < 1.0):
            raise ValueError("validation_of_train must lie in [0, 1)")

    def sizes(self, n: int) -> tuple[int, int, int]:
        head = math.floor(self.train_ratio * n)
        train = math.floor((1.0 - self.validation_of_train) * head)
        val = head - train
        test = n - head
        return train, val, test


@dataclass(frozen=True)
class Split:
    train: TimeSeries
    val: TimeSeries
    test: TimeSeries


def split(series: TimeSeries, spec: SplitSpec = SplitSpec()) -> Split:
    """Cut a series into contiguous train / validation / test segments."""
    n = len(series)
    if n < 10:
        raise SeriesTooShort(f"splitting requires at least 10 observations, got {n}")
    train_n, val_n, _ = spec.sizes(n)
    return Split(
        train=series.segment(0, train_n),
        val=series.segment(train_n, train_n + val_n),
        test=series.segment(train_n + val_n, n),
    )


@dataclass(frozen=True)
class StandardizeParams:
    """Mean and population standard deviation of the fitting segment."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not (np.isfinite(self.mu) and np.isfinite(self.sigma)):
            raise ValueError("standardization parameters must be finite")
        if self.sigma <= 0.0:
            raise ConstantSeries("standard deviation must be positive")


def fit_standardizer(train: TimeSeries) -> StandardizeParams:
    """Estimate (mu, sigma) on the training segment; sigma uses 1/n variance."""
    values = train.values
    mu = float(values.mean())
    sigma = float(values.std())
    if sigma == 0.0:
        raise ConstantSeries(f"series {train.series_id!r} is constant on the training segment")
    return StandardizeParams(mu=mu, sigma=sigma)


def standardize(series: TimeSeries, params: StandardizeParams) -> TimeSeries:
    """Apply (x - mu) / sigma elementwise; labels and id are unchanged."""
    return series.with_values((series.values - params.mu) / params.sigma)


def difference(series: TimeSeries, order: int = 1) -> TimeSeries:
    """First-difference the series ``order`` times.

    Each pass maps X to Y_t = X_t - X_{t-1}.  A differenced point inherits
    the label of its right endpoint, so an anomalous jump stays labeled at
    the timestamp where it appears.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    if order == 0:
        return series
    if len(series) <= order:
        raise SeriesTooShort(f"cannot difference {len(series)} points {order} times")
    values = series.values
    for _ in range(order):
        values = np.diff(values)
    labels = None if series.labels is None else series.labels[order:]
    return TimeSeries(
        values=values,
        labels=labels,
        series_id=series.series_id,
        period_hint=series.period_hint,
    )


def seasonal_difference(series: TimeSeries, period: int) -> TimeSeries:
    """Subtract the observation one season back: Y_t = X_t - X_{t-period}."""
    if period < 1:
        raise InvalidPeriod(f"period must be >= 1, got {period}")
    n = len(series)
    if n <= period:
        raise PeriodTooLong(f"period {period} leaves no observations from n={n}")
    values = series.values[period:] - series.values[:-period]
    labels = None if series.labels is None else series.labels[period:]
    return TimeSeries(
        values=values,
        labels=labels,
        series_id=series.series_id,
        period_hint=series.period_hint,
    )
