"""Forecast-then-residual detectors: AR, MA, ARMA/ARIMA, smoothing, PCI.

Every detector here forecasts one step ahead over the test segment using
true past values and scores each point by its absolute forecast error.
Fitting is self-contained: least squares for AR, two-stage regression for
MA, conditional-sum-of-squares Gauss-Newton for ARMA, grid search for the
smoothing family, and an inverse-distance predictor with a Student-t band
for PCI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core import DetectorConfig, FittedDetector, ScoreSeries, TimeSeries
from ..errors import (
    InvalidOrder,
    InvalidPeriod,
    OrderTooLarge,
    PeriodTooLong,
    SeriesTooShort,
    SingularDesign,
)
from ..preprocessing import difference

__all__ = [
    "ArFit",
    "MaFit",
    "ArmaFit",
    "ArimaFit",
    "SmoothingFit",
    "PciFit",
    "lag_cap",
    "ar_fit",
    "ar_score",
    "ma_fit",
    "ma_score",
    "arma_fit",
    "arima_fit",
    "arima_score",
    "ses_fit",
    "holt_fit",
    "holtwinters_fit",
    "smoothing_score",
    "pci_fit",
    "pci_score",
    "student_t_ppf",
]

_GRID = np.arange(1, 100) / 100.0  # 0.01 .. 0.99


def lag_cap(n_train: int) -> int:
    """Maximal autoregressive order for a training set of n observations."""
    return math.floor(12.0 * (n_train / 100.0) ** 0.25)


# ---------------------------------------------------------------------------
# AR


@dataclass(frozen=True)
class ArFit:
    """Autoregression x_t = c + sum_i a_i x_{t-i} + e_t."""

    p: int
    coefficients: np.ndarray
    intercept: float
    residual_sigma: float

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=np.float64)
        if self.p < 1 or coeffs.shape != (self.p,):
            raise InvalidOrder(f"need p >= 1 coefficients, got p={self.p}, {coeffs.shape}")
        if not (np.all(np.isfinite(coeffs)) and math.isfinite(self.intercept)):
            raise ValueError("AR parameters must be finite")
        if not math.isfinite(self.residual_sigma) or self.residual_sigma < 0.0:
            raise ValueError("residual_sigma must be finite and non-negative")
        object.__setattr__(self, "coefficients", coeffs)


def _lag_matrix(values: np.ndarray, p: int) -> np.ndarray:
    """Row t-p holds (x_{t-1}, ..., x_{t-p}) for t = p .. n-1."""
    windows = np.lib.stride_tricks.sliding_window_view(values, p)[:-1]
    return windows[:, ::-1]


def ar_fit(train: TimeSeries, p: Optional[int] = None) -> ArFit:
    """Conditional least squares: minimize sum over t>=p of (x_t - c - a.x_lags)^2.

    When p is omitted it defaults to the lag cap, clamped so at least three
    observations per parameter remain.
    """
    values = train.values
    n = values.size
    cap = lag_cap(n)
    if p is None:
        p = max(1, min(cap, n // 3))
    if p < 1:
        raise InvalidOrder(f"p must be >= 1, got {p}")
    if p > cap:
        raise OrderTooLarge(f"p={p} exceeds the lag cap {cap} for n={n}")
    if n < 3 * p:
        raise SeriesTooShort(f"AR({p}) needs at least {3 * p} observations, got {n}")

    design = np.column_stack((_lag_matrix(values, p), np.ones(n - p)))
    target = values[p:]
    theta, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    if rank < p + 1:
        raise SingularDesign(f"AR design matrix is rank-deficient (rank {rank} < {p + 1})")
    residuals = target - design @ theta
    return ArFit(
        p=p,
        coefficients=theta[:p],
        intercept=float(theta[p]),
        residual_sigma=float(np.sqrt(np.mean(residuals**2))),
    )


def ar_score(fit: ArFit, test: TimeSeries, detector_name: str = "ar") -> ScoreSeries:
    """One-step-ahead absolute forecast errors, rolling over true past values."""
    values = test.values
    p = fit.p
    if values.size <= p:
        return ScoreSeries(
            scores=np.empty(0), indices=np.empty(0, dtype=np.int64), detector_name=detector_name
        )
    predictions = _lag_matrix(values, p) @ fit.coefficients + fit.intercept
    return ScoreSeries(
        scores=np.abs(values[p:] - predictions),
        indices=np.arange(p, values.size, dtype=np.int64),
        detector_name=detector_name,
    )


# ---------------------------------------------------------------------------
# MA


@dataclass(frozen=True)
class MaFit:
    """Moving average x_t = mu + sum_j b_j e_{t-j} + e_t."""

    q: int
    coefficients: np.ndarray
    mu: float
    long_ar_order: int

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=np.float64)
        if self.q < 1 or coeffs.shape != (self.q,):
            raise InvalidOrder(f"need q >= 1 coefficients, got q={self.q}, {coeffs.shape}")
        if not (np.all(np.isfinite(coeffs)) and math.isfinite(self.mu)):
            raise ValueError("MA parameters must be finite")
        object.__setattr__(self, "coefficients", coeffs)


def ma_fit(train: TimeSeries, q: int) -> MaFit:
    """Two-stage estimation: long-AR residuals, then OLS on their lags.

    Stage one fits an AR of lag-cap order to proxy the innovations; stage
    two regresses x_t - mu on the q lagged residual estimates.
    """
    values = train.values
    n = values.size
    if q < 1:
        raise InvalidOrder(f"q must be >= 1, got {q}")
    long_order = max(1, min(lag_cap(n), n // 3))
    rows = n - long_order - q
    if rows < 2 * q:
        raise OrderTooLarge(
            f"MA({q}) with long AR order {long_order} leaves {rows} rows from n={n}; "
            f"need at least {2 * q}"
        )
    long_ar = ar_fit(train, long_order)
    eps = values[long_order:] - (
        _lag_matrix(values, long_order) @ long_ar.coefficients + long_ar.intercept
    )
    mu = float(values.mean())
    # Row t holds (eps_{t-1}, ..., eps_{t-q}) for targets x_t, t >= long_order+q.
    design = _lag_matrix(eps, q)
    target = values[long_order + q :] - mu
    coeffs, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    if rank < q:
        raise SingularDesign(f"MA design matrix is rank-deficient (rank {rank} < {q})")
    return MaFit(q=q, coefficients=coeffs, mu=mu, long_ar_order=long_order)


def ma_score(fit: MaFit, test: TimeSeries, detector_name: str = "ma") -> ScoreSeries:
    """Run the innovation recursion forward: e_t = x_t - mu - b.e_lags."""
    values = test.values
    n = values.size
    q = fit.q
    b = fit.coefficients
    eps = np.zeros(n + q)  # leading q zeros stand in for pre-test innovations
    scores = np.empty(n)
    for t in range(n):
        pred = fit.mu + b @ eps[t : t + q][::-1]
        eps[t + q] = values[t] - pred
        scores[t] = abs(eps[t + q])
    return ScoreSeries(
        scores=scores, indices=np.arange(n, dtype=np.int64), detector_name=detector_name
    )


# ---------------------------------------------------------------------------
# ARMA / ARIMA


@dataclass(frozen=True)
class ArmaFit:
    """Mixed model x_t = c + sum a_i x_{t-i} + sum b_j e_{t-j} + e_t."""

    p: int
    q: int
    ar: np.ndarray
    ma: np.ndarray
    intercept: float
    converged: bool = True

    def __post_init__(self):
        ar = np.asarray(self.ar, dtype=np.float64)
        ma = np.asarray(self.ma, dtype=np.float64)
        if self.p < 0 or self.q < 0 or self.p + self.q < 1:
            raise InvalidOrder(f"need p, q >= 0 and p+q >= 1, got p={self.p}, q={self.q}")
        if ar.shape != (self.p,) or ma.shape != (self.q,):
            raise InvalidOrder("coefficient lengths must match p and q")
        if not (np.all(np.isfinite(ar)) and np.all(np.isfinite(ma)) and math.isfinite(self.intercept)):
            raise ValueError("ARMA parameters must be finite")
        object.__setattr__(self, "ar", ar)
        object.__setattr__(self, "ma", ma)


@dataclass(frozen=True)
class ArimaFit:
    """ARMA after d rounds of differencing; keeps the train tail for warm-up."""

    d: int
    inner: ArmaFit
    warmup: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.d not in (0, 1, 2):
            raise InvalidOrder(f"d must be 0, 1 or 2, got {self.d}")
        warmup = (
            np.empty(0) if self.warmup is None else np.asarray(self.warmup, dtype=np.float64)
        )
        if warmup.size != self.d:
            raise ValueError(f"warm-up must hold exactly d={self.d} trailing train values")
        object.__setattr__(self, "warmup", warmup)


def _css_residuals(values: np.ndarray, theta: np.ndarray, p: int, q: int) -> np.ndarray:
    """Innovations e_t for t in [p, n), zero-initialized before that."""
    c = theta[0]
    ar = theta[1 : 1 + p]
    ma = theta[1 + p :]
    n = values.size
    eps = np.zeros(n)
    for t in range(p, n):
        pred = c
        for i in range(p):
            pred += ar[i] * values[t - 1 - i]
        for j in range(q):
            if t - 1 - j >= p:
                pred += ma[j] * eps[t - 1 - j]
        eps[t] = values[t] - pred
    return eps


def _css_jacobian(values: np.ndarray, theta: np.ndarray, p: int, q: int, eps: np.ndarray) -> np.ndarray:
    """d eps_t / d theta via the same recursion, rows zero for t < p."""
    ma = theta[1 + p :]
    n = values.size
    k = theta.size
    jac = np.zeros((n, k))
    for t in range(p, n):
        row = jac[t]
        row[0] = -1.0
        for i in range(p):
            row[1 + i] = -values[t - 1 - i]
        for j in range(q):
            if t - 1 - j >= p:
                row[1 + p + j] = -eps[t - 1 - j]
                row -= ma[j] * jac[t - 1 - j]
    return jac


def arma_fit(train: TimeSeries, p: int, q: int) -> ArmaFit:
    """Conditional sum of squares minimized by damped Gauss-Newton.

    Initialized from a two-stage regression on long-AR residuals; stops when
    the improvement falls below 1e-8 or after 500 iterations, in which case
    the best iterate is returned flagged not converged.
    """
    if p < 0 or q < 0 or p + q < 1:
        raise InvalidOrder(f"need p, q >= 0 and p+q >= 1, got p={p}, q={q}")
    values = train.values
    n = values.size
    if n < 3 * (p + q) + 2:
        raise SeriesTooShort(f"ARMA({p},{q}) needs at least {3 * (p + q) + 2} points, got {n}")

    theta = _hannan_rissanen_init(values, p, q)
    eps = _css_residuals(values, theta, p, q)
    sse = float(eps @ eps)
    lam = 1e-3
    converged = False
    for _ in range(500):
        jac = _css_jacobian(values, theta, p, q, eps)
        grad = jac.T @ eps
        hess = jac.T @ jac
        accepted = False
        for _ in range(15):
            try:
                delta = np.linalg.solve(hess + lam * np.eye(theta.size), -grad)
            except np.linalg.LinAlgError:
                raise SingularDesign("ARMA normal equations are singular") from None
            candidate = theta + delta
            eps_new = _css_residuals(values, candidate, p, q)
            sse_new = float(eps_new @ eps_new)
            if math.isfinite(sse_new) and sse_new < sse:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            converged = True  # no damped step improves: at a local minimum
            break
        improvement = sse - sse_new
        theta, eps, sse = candidate, eps_new, sse_new
        lam = max(lam / 10.0, 1e-12)
        if improvement < 1e-8:
            converged = True
            break
    return ArmaFit(
        p=p,
        q=q,
        ar=theta[1 : 1 + p],
        ma=theta[1 + p :],
        intercept=float(theta[0]),
        converged=converged,
    )


def _hannan_rissanen_init(values: np.ndarray, p: int, q: int) -> np.ndarray:
    n = values.size
    long_order = max(p, q, min(lag_cap(n), max(1, n // 4)))
    if n < 3 * long_order:
        long_order = max(1, n // 3)
    series = TimeSeries(values=values, series_id="_init")
    long_ar = ar_fit(series, long_order)
    eps = np.zeros(n)
    eps[long_order:] = values[long_order:] - (
        _lag_matrix(values, long_order) @ long_ar.coefficients + long_ar.intercept
    )
    start = long_order + max(p, q)
    cols = [np.ones(n - start)]
    for i in range(1, p + 1):
        cols.append(values[start - i : n - i])
    for j in range(1, q + 1):
        cols.append(eps[start - j : n - j])
    design = np.column_stack(cols)
    theta, _, rank, _ = np.linalg.lstsq(design, values[start:], rcond=None)
    if rank < design.shape[1]:
        raise SingularDesign("ARMA initialization design is rank-deficient")
    return theta


def arima_fit(
    train: TimeSeries, p: int = 1, d: Optional[int] = None, q: int = 2
) -> ArimaFit:
    """Difference d times, then fit ARMA(p, q) on what remains.

    When d is omitted, a cheap trend test picks 1 if a least-squares line
    over the train rises by more than two residual standard deviations end
    to end, else 0.
    """
    if d is None:
        d = _trend_order(train.values)
    if d not in (0, 1, 2):
        raise InvalidOrder(f"d must be 0, 1 or 2, got {d}")
    if len(train) < 3 * (p + q) + d + 2:
        raise SeriesTooShort(
            f"ARIMA({p},{d},{q}) needs at least {3 * (p + q) + d + 2} points, got {len(train)}"
        )
    differenced = difference(train, d)
    inner = arma_fit(differenced, p, q)
    warmup = train.values[len(train) - d :] if d else np.empty(0)
    return ArimaFit(d=d, inner=inner, warmup=warmup)


def _trend_order(values: np.ndarray) -> int:
    n = values.size
    design = np.column_stack((np.arange(n, dtype=np.float64), np.ones(n)))
    theta = np.linalg.lstsq(design, values, rcond=None)[0]
    sigma = float(np.sqrt(np.mean((values - design @ theta) ** 2)))
    return 1 if abs(theta[0]) * n > 2.0 * sigma else 0


def arima_score(fit: ArimaFit, test: TimeSeries, detector_name: str = "arima") -> ScoreSeries:
    """Difference the test (train tail as warm-up), then one-step residuals."""
    inner = fit.inner
    values = test.values
    if fit.d:
        extended = np.concatenate((fit.warmup, values))
        for _ in range(fit.d):
            extended = np.diff(extended)
    else:
        extended = values
    # extended[i] now corresponds to test index i.
    n = extended.size
    p, q = inner.p, inner.q
    if n <= p:
        return ScoreSeries(
            scores=np.empty(0), indices=np.empty(0, dtype=np.int64), detector_name=detector_name
        )
    theta = np.concatenate(([inner.intercept], inner.ar, inner.ma))
    eps = _css_residuals(extended, theta, p, q)
    return ScoreSeries(
        scores=np.abs(eps[p:]),
        indices=np.arange(p, n, dtype=np.int64),
        detector_name=detector_name,
    )


# ---------------------------------------------------------------------------
# Exponential smoothing family


@dataclass(frozen=True)
class SmoothingFit:
    """Level/trend/season recursion state after the training sweep.

    beta None means no trend component (simple smoothing); gamma None means
    no seasonal component.  ``season`` holds the last season_period seasonal
    values, oldest first.
    """

    alpha: float
    beta: Optional[float] = None
    gamma: Optional[float] = None
    season_period: Optional[int] = None
    level: float = 0.0
    trend: float = 0.0
    season: Optional[tuple] = None
    train_sse: float = 0.0

    def __post_init__(self):
        for name, value in (("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)):
            if value is not None and not (0.0 <= value <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.gamma is not None:
            if self.season_period is None or self.season_period < 2:
                raise InvalidPeriod("seasonal smoothing requires season_period >= 2")
            if self.season is None or len(self.season) != self.season_period:
                raise ValueError("season state must hold season_period values")


def ses_fit(train: TimeSeries, alpha: Optional[float] = None) -> SmoothingFit:
    """Simple exponential smoothing; alpha grid-searched on one-step SSE."""
    values = train.values
    if values.size < 2:
        raise SeriesTooShort("smoothing needs at least 2 observations")
    alphas = _GRID if alpha is None else np.asarray([alpha], dtype=np.float64)
    levels = np.full(alphas.size, values[0])
    sse = np.zeros(alphas.size)
    for t in range(1, values.size):
        err = values[t] - levels
        sse += err * err
        # Interpolation form: alpha == 1 reproduces the observation exactly.
        levels = alphas * values[t] + (1.0 - alphas) * levels
    best = int(np.argmin(sse))
    return SmoothingFit(alpha=float(alphas[best]), level=float(levels[best]), train_sse=float(sse[best]))


def holt_fit(
    train: TimeSeries, alpha: Optional[float] = None, beta: Optional[float] = None
) -> SmoothingFit:
    """Level+trend smoothing; (alpha, beta) grid-searched on one-step SSE."""
    values = train.values
    if values.size < 3:
        raise SeriesTooShort("trend smoothing needs at least 3 observations")
    a_axis = _GRID if alpha is None else np.asarray([alpha], dtype=np.float64)
    b_axis = _GRID if beta is None else np.asarray([beta], dtype=np.float64)
    alphas = np.repeat(a_axis, b_axis.size)
    betas = np.tile(b_axis, a_axis.size)
    levels = np.full(alphas.size, values[0])
    trends = np.full(alphas.size, values[1] - values[0])
    sse = np.zeros(alphas.size)
    for t in range(1, values.size):
        forecast = levels + trends
        err = values[t] - forecast
        sse += err * err
        new_levels = alphas * values[t] + (1.0 - alphas) * forecast
        trends = betas * (new_levels - levels) + (1.0 - betas) * trends
        levels = new_levels
    best = int(np.argmin(sse))
    return SmoothingFit(
        alpha=float(alphas[best]),
        beta=float(betas[best]),
        level=float(levels[best]),
        trend=float(trends[best]),
        train_sse=float(sse[best]),
    )


def _hw_sweep(
    values: np.ndarray, period: int, alphas: np.ndarray, betas: np.ndarray, gammas: np.ndarray
):
    """Vectorized seasonal recursion over a combo axis; returns sse and states."""
    n = values.size
    k = alphas.size
    level0 = float(values[:period].mean())
    trend0 = float((values[period : 2 * period].mean() - level0) / period)
    levels = np.full(k, level0)
    trends = np.full(k, trend0)
    seasons = np.empty((n, k))
    seasons[:period] = (values[:period] - level0)[:, None]
    sse = np.zeros(k)
    for t in range(period, n):
        x = values[t]
        season_prev = seasons[t - period]
        forecast = levels + trends + season_prev
        err = x - forecast
        sse += err * err
        new_levels = alphas * x + (1.0 - alphas) * (levels + trends)
        trends = betas * (new_levels - levels) + (1.0 - betas) * trends
        seasons[t] = gammas * (x - new_levels) + (1.0 - gammas) * season_prev
        levels = new_levels
    return sse, levels, trends, seasons[n - period : n]


def holtwinters_fit(
    train: TimeSeries,
    period: int,
    alpha: Optional[float] = None,
    beta: Optional[float] = None,
    gamma: Optional[float] = None,
) -> SmoothingFit:
    """Additive level+trend+season smoothing tuned by coordinate grid descent.

    Each free parameter is swept over {0.01, ..., 0.99} with the others
    fixed, cycling three rounds; the full cartesian grid would cost 99^3
    recursions for the same axis resolution.
    """
    if period < 2:
        raise InvalidPeriod(f"period must be >= 2, got {period}")
    values = train.values
    if values.size < 2 * period:
        raise PeriodTooLong(
            f"need at least 2*period = {2 * period} observations, got {values.size}"
        )
    current = {
        "alpha": 0.5 if alpha is None else alpha,
        "beta": 0.5 if beta is None else beta,
        "gamma": 0.5 if gamma is None else gamma,
    }
    free = [name for name, fixed in (("alpha", alpha), ("beta", beta), ("gamma", gamma)) if fixed is None]
    for _ in range(3 if free else 0):
        for name in free:
            axes = {
                key: (_GRID if key == name else np.full(_GRID.size, current[key]))
                for key in ("alpha", "beta", "gamma")
            }
            sse, _, _, _ = _hw_sweep(values, period, axes["alpha"], axes["beta"], axes["gamma"])
            current[name] = float(_GRID[int(np.argmin(sse))])
    one = np.asarray([1.0])
    sse, levels, trends, season_tail = _hw_sweep(
        values,
        period,
        one * current["alpha"],
        one * current["beta"],
        one * current["gamma"],
    )
    return SmoothingFit(
        alpha=current["alpha"],
        beta=current["beta"],
        gamma=current["gamma"],
        season_period=period,
        level=float(levels[0]),
        trend=float(trends[0]),
        season=tuple(season_tail[:, 0]),
        train_sse=float(sse[0]),
    )


def smoothing_score(fit: SmoothingFit, test: TimeSeries, detector_name: str = "es") -> ScoreSeries:
    """Absolute one-step errors with the smoothing state rolled through test."""
    values = test.values
    n = values.size
    scores = np.empty(n)
    level = fit.level
    trend = fit.trend if fit.beta is not None else 0.0
    seasonal = fit.gamma is not None
    ring = list(fit.season) if seasonal else []
    for t in range(n):
        x = values[t]
        season_prev = ring[0] if seasonal else 0.0
        forecast = level + trend + season_prev
        scores[t] = abs(x - forecast)
        new_level = fit.alpha * x + (1.0 - fit.alpha) * (level + trend)
        if fit.beta is not None:
            trend = fit.beta * (new_level - level) + (1.0 - fit.beta) * trend
        if seasonal:
            ring.append(fit.gamma * (x - new_level) + (1.0 - fit.gamma) * season_prev)
            ring.pop(0)
        level = new_level
    return ScoreSeries(
        scores=scores, indices=np.arange(n, dtype=np.int64), detector_name=detector_name
    )


# ---------------------------------------------------------------------------
# PCI


@dataclass(frozen=True)
class PciFit:
    """Inverse-distance forecast band: half-width t_{alpha,2k-1} * s * sqrt(1+1/(2k))."""

    k: int = 30
    alpha: float = 98.5
    residual_s: float = 0.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not (50.0 < self.alpha < 100.0):
            raise ValueError(f"alpha must lie in (50, 100), got {self.alpha}")
        if not math.isfinite(self.residual_s) or self.residual_s < 0.0:
            raise ValueError("residual_s must be finite and non-negative")


def _pci_predict(values: np.ndarray, k: int, two_sided: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Weighted forecasts and the indices they apply to; weights 1/distance."""
    n = values.size
    if two_sided:
        if n < 2 * k + 1:
            raise SeriesTooShort(f"two-sided PCI needs more than 2k={2 * k} points, got {n}")
        idx = np.arange(k, n - k, dtype=np.int64)
        offsets = np.concatenate((np.arange(-k, 0), np.arange(1, k + 1)))
        weights = 1.0 / np.abs(offsets)
        cols = np.stack([values[idx + off] for off in offsets], axis=1)
        return cols @ weights / weights.sum(), idx
    if n <= 2 * k:
        raise SeriesTooShort(f"PCI needs more than 2k={2 * k} points, got {n}")
    idx = np.arange(2 * k, n, dtype=np.int64)
    # Window row for index t is (x_{t-2k}, ..., x_{t-1}); weight 1/j for lag j.
    windows = np.lib.stride_tricks.sliding_window_view(values, 2 * k)[:-1]
    weights = 1.0 / np.arange(2 * k, 0, -1)
    return windows @ weights / weights.sum(), idx


def pci_fit(train: TimeSeries, k: int = 30, alpha: float = 98.5) -> PciFit:
    """Estimate the predictor's residual spread on the training series."""
    predictions, idx = _pci_predict(train.values, k)
    residuals = train.values[idx] - predictions
    return PciFit(k=k, alpha=alpha, residual_s=float(residuals.std()))


def pci_score(
    train: TimeSeries,
    test: TimeSeries,
    k: int = 30,
    alpha: float = 98.5,
    two_sided: bool = False,
    detector_name: str = "pci",
) -> ScoreSeries:
    """|residual| / interval half-width; score > 1 means outside the band."""
    fit = pci_fit(train, k, alpha)
    return pci_score_fitted(fit, test, two_sided=two_sided, detector_name=detector_name)


def pci_score_fitted(
    fit: PciFit, test: TimeSeries, two_sided: bool = False, detector_name: str = "pci"
) -> ScoreSeries:
    predictions, idx = _pci_predict(test.values, fit.k, two_sided=two_sided)
    t_quantile = student_t_ppf(fit.alpha / 100.0, 2 * fit.k - 1)
    half_width = t_quantile * max(fit.residual_s, 1e-12) * math.sqrt(1.0 + 1.0 / (2 * fit.k))
    return ScoreSeries(
        scores=np.abs(test.values[idx] - predictions) / half_width,
        indices=idx,
        detector_name=detector_name,
    )


# ---------------------------------------------------------------------------
# Student-t quantile (no lookup tables)


def _beta_cont_frac(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        coef = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + coef * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + coef / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        coef = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + coef * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + coef / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        step = d * c
        h *= step
        if abs(step - 1.0) < 3e-16:
            break
    return h


def _reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cont_frac(a, b, x) / a
    return 1.0 - front * _beta_cont_frac(b, a, 1.0 - x) / b


def _student_t_cdf(t: float, dof: int) -> float:
    x = dof / (dof + t * t)
    tail = 0.5 * _reg_inc_beta(dof / 2.0, 0.5, x)
    return 1.0 - tail if t >= 0.0 else tail


def student_t_ppf(p: float, dof: int) -> float:
    """Quantile of Student's t via bisection on the incomplete-beta CDF.

    Bisection runs until the bracket is narrower than 1e-10.
    """
    if dof < 1:
        raise ValueError(f"degrees of freedom must be >= 1, got {dof}")
    if not (0.0 < p < 1.0):
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -student_t_ppf(1.0 - p, dof)
    lo, hi = 0.0, 1.0
    while _student_t_cdf(hi, dof) < p:
        hi *= 2.0
        if hi > 1e12:
            raise ArithmeticError("t quantile bracket expansion failed")
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if _student_t_cdf(mid, dof) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Detector adapters (uniform fit/score contract)


def _reject_unknown_keys(cfg: DetectorConfig, allowed: frozenset):
    unknown = set(cfg.hyperparameters) - set(allowed)
    if unknown:
        raise ValueError(
            f"{cfg.name}: unknown hyperparameter keys {sorted(unknown)}; "
            f"allowed: {sorted(allowed)}"
        )


class ArDetector:
    """Autoregression of order p (default: the lag-cap formula)."""

    name = "ar"
    family = "statistical"
    keys = frozenset({"p"})
    defaults = {"p": "lag cap floor(12*(n_train/100)^(1/4))"}

    def fit(self, train: TimeSeries, cfg: DetectorConfig) -> FittedDetector:
        _reject_unknown_keys(cfg, self.keys)
        return FittedDetector.wrap(cfg, ar_fit(train, cfg.param("p")))

    def score(self, fitted: FittedDetector, test: TimeSeries) -> ScoreSeries:
        return ar_score(fitted.state, test, detector_name=fitted.name)


class MaDetector:
    """Moving average of order q (default: the window width)."""

    name = "ma"
    family = "statistical"
    keys = frozenset({"q"})
    defaults = {"q": "window width w"}

    def fit(self, train: TimeSeries, cfg: DetectorConfig) -> FittedDetector:
        _reject_unknown_keys(cfg, self.keys)
        q = cfg.param("q", cfg.window_width)
        return FittedDetector.wrap(cfg, ma_fit(train, q))

    def score(self, fitted: FittedDetector, test: TimeSeries) -> ScoreSeries:
        return ma_score(fitted.state, test, detector_name=fitted.name)


class ArimaDetector:
    """ARIMA(p, d, q); d defaults to a cheap trend test, orders to (1, 2)."""

    name = "arima"
    family = "statistical"
    keys = frozenset({"p", "d", "q"})
    defaults = {"p": 1, "d": "1 if trend detected else 0", "q": 2}

    def fit(self, train: TimeSeries, cfg: DetectorConfig) -> FittedDetector:
        _reject_unknown_keys(cfg, self.keys)
        fit = arima_fit(train, cfg.param("p", 1), cfg.param("d"), cfg.param("q", 2))
        return FittedDetector.wrap(cfg, fit)

    def score(self, fitted: FittedDetector, test: TimeSeries) -> ScoreSeries:
        return arima_score(fitted.state, test, detector_name=fitted.name)


class SesDetector:
    """Simple exponential smoothing; alpha grid-searched unless fixed."""

    name = "ses"
    family = "statistical"
    keys = frozenset({"alpha"})
    defaults = {"alpha": "grid search over {0.01..0.99}"}

    def fit(self, train: TimeSeries, cfg: DetectorConfig) -> FittedDetector:
        _reject_unknown_keys(cfg, self.keys)
        return FittedDetector.wrap(cfg, ses_fit(train, cfg.param("alpha")))

    def score(self, fitted: FittedDetector, test: TimeSeries) -> ScoreSeries:
        return smoothing_score(fitted.state, test, detector_name=fitted.name)


class EsDetector:
    """Seasonal (or, without a period, trend-only) exponential smoothing."""

    name = "es"
    family = "statistical"
    keys = frozenset({"alpha", "beta", "gamma", "period"})
    defaults = {
        "alpha": "grid search",
        "beta": "grid search",
        "gamma": "grid search (seasonal only)",
        "period": "series period hint; trend-only smoothing when absent",
    }

    def fit(self, train: TimeSeries, cfg: DetectorConfig) -> FittedDetector:
        _reject_unknown_keys(cfg, self.keys)
        period = cfg.param("period", train.period_hint)
        if period is None:
            fit = holt_fit(train, cfg.param("alpha"), cfg.param("beta"))
        else:
            fit = holtwinters_fit(
                train, int(period), cfg.param("alpha"), cfg.param("beta"), cfg.param("gamma")
            )
        return FittedDetector.wrap(cfg, fit)

    def score(self, fitted: FittedDetector, test: TimeSeries) -> ScoreSeries:
        return smoothing_score(fitted.state, test, detector_name=fitted.name)


class PciDetector:
    """Inverse-distance forecast with a Student-t confidence band."""

    name = "pci"
    family = "statistical"
    keys = frozenset({"k", "pci_alpha", "two_sided"})
    defaults = {"k": 30, "pci_alpha": 98.5, "two_sided": False}

    def fit(self, train: TimeSeries, cfg: DetectorConfig) -> FittedDetector:
        _reject_unknown_keys(cfg, self.keys)
        fit = pci_fit(train, int(cfg.param("k", 30)), float(cfg.param("pci_alpha", 98.5)))
        return FittedDetector.wrap(cfg, fit)

    def score(self, fitted: FittedDetector, test: TimeSeries) -> ScoreSeries:
        return pci_score_fitted(
            fitted.state,
            test,
            two_sided=bool(fitted.config.param("two_sided", False)),
            detector_name=fitted.name,
        )
