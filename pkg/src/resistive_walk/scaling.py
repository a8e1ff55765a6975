"""Growth functions, scale membership, and scaling-exponent fits.

A growth function is R^exponent times a power of log(e+R), normalized to
1 at R = 1.  A radius R is a good scale at tolerance lam when the ball
volume sits within [v(R)/lam, lam v(R)], the resistance to the ball
complement is at least r(R)/lam, and every in-ball pointwise resistance
is at most lam r(d).  All three clauses relax as lam grows, so
membership is monotone in lam.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InvalidArgumentError
from .graph import Graph
from .resistance import OriginResistanceCache, effective_resistance

# max of R / ((e+R) log(e+R)), the lever arm of the log factor on the
# local log-log slope
_H_MAX = float(
    -minimize_scalar(
        lambda R: -R / ((math.e + R) * math.log(math.e + R)),
        bounds=(0.5, 50.0),
        method="bounded",
    ).fun
)


@dataclass(frozen=True)
class GrowthFunction:
    """R^exponent * log(e+R)^log_power, normalized so the value at 1 is 1."""

    exponent: float
    log_power: float = 0.0

    def __post_init__(self) -> None:
        if not self.exponent > 0:
            raise InvalidArgumentError("growth exponent must be positive")
        if self.local_slope_bounds()[0] <= 0:
            raise InvalidArgumentError(
                "log_power too negative: growth would not be strictly increasing"
            )

    def __call__(self, radius: float) -> float:
        if radius < 0:
            raise InvalidArgumentError("radius must be nonnegative")
        if radius == 0:
            return 0.0
        scale = math.log(math.e + 1.0) ** -self.log_power
        return radius ** self.exponent * math.log(math.e + radius) ** self.log_power * scale

    def local_slope(self, radius: float) -> float:
        """d log v / d log R at the given radius."""
        return self.exponent + self.log_power * radius / (
            (math.e + radius) * math.log(math.e + radius)
        )

    def local_slope_bounds(self) -> tuple[float, float]:
        """Extremes of the local log-log slope over all radii (doubling exponents)."""
        swing = self.log_power * _H_MAX
        return (
            self.exponent + min(0.0, swing),
            self.exponent + max(0.0, swing),
        )


def displacement_scale(
    volume_growth: GrowthFunction, resistance_growth: GrowthFunction, n: float
) -> float:
    """Invert (v * r)(R) = n by bisection to 1e-10 relative accuracy."""
    if not n > 0:
        raise InvalidArgumentError("n must be positive")

    def product(R: float) -> float:
        return volume_growth(R) * resistance_growth(R)

    hi = 1.0
    while product(hi) < n:
        hi *= 2.0
        if hi > 2.0 ** 400:
            raise InvalidArgumentError("n too large to invert")
    lo = 0.0
    while hi - lo > 1e-10 * hi:
        mid = 0.5 * (lo + hi)
        if product(mid) < n:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -- good-scale membership ---------------------------------------------------


@dataclass(frozen=True)
class ScaleObservables:
    """Tolerance-independent inputs to the good-scale test at one radius."""

    radius: int
    volume: float
    complement_resistance: float
    max_pointwise_ratio: float
    witness: int | None


def scale_observables(
    g: Graph,
    radius: int,
    metric: str = "line",
    resistance_growth: GrowthFunction | None = None,
    cache: OriginResistanceCache | None = None,
) -> ScaleObservables:
    """Measure the three clause quantities at one radius."""
    g.check_probe_radius(radius)
    dist = g.distances_from(g.marked, metric)
    inside = dist < radius
    outside_labels = g.labels[~inside]
    if outside_labels.size == 0:
        raise InvalidArgumentError(f"ball of radius {radius} covers the whole graph")
    volume = float(g.measure[inside].sum())
    reff = effective_resistance(g, [g.marked], outside_labels)
    others = inside & (g.labels != g.marked)
    witness: int | None = None
    max_ratio = 0.0
    if others.any():
        if cache is None:
            cache = OriginResistanceCache(g)
        pair = cache.pair_resistance(g.labels[others])
        denom = np.asarray(
            [
                resistance_growth(float(d)) if resistance_growth else float(d)
                for d in dist[others]
            ]
        )
        ratios = pair / denom
        k = int(np.argmax(ratios))
        max_ratio = float(ratios[k])
        witness = int(g.labels[others][k])
    return ScaleObservables(int(radius), volume, reff, max_ratio, witness)


@dataclass(frozen=True)
class GoodScaleReport:
    radius: int
    tolerance: float
    volume_ok: bool
    resistance_ok: bool
    pointwise_ok: bool
    observables: ScaleObservables

    @property
    def member(self) -> bool:
        return self.volume_ok and self.resistance_ok and self.pointwise_ok


def evaluate_good_scale(
    obs: ScaleObservables,
    tolerance: float,
    volume_growth: GrowthFunction,
    resistance_growth: GrowthFunction,
) -> GoodScaleReport:
    if not tolerance >= 1:
        raise InvalidArgumentError("tolerance must be at least 1")
    v = volume_growth(obs.radius)
    r = resistance_growth(obs.radius)
    return GoodScaleReport(
        radius=obs.radius,
        tolerance=float(tolerance),
        volume_ok=v / tolerance <= obs.volume <= v * tolerance,
        resistance_ok=obs.complement_resistance >= r / tolerance,
        pointwise_ok=obs.max_pointwise_ratio <= tolerance,
        observables=obs,
    )


def check_good_scale(
    g: Graph,
    radius: int,
    tolerance: float,
    volume_growth: GrowthFunction,
    resistance_growth: GrowthFunction,
    metric: str = "line",
    cache: OriginResistanceCache | None = None,
) -> GoodScaleReport:
    """Full three-clause membership test for one (radius, tolerance) pair."""
    obs = scale_observables(g, radius, metric, resistance_growth, cache)
    return evaluate_good_scale(obs, tolerance, volume_growth, resistance_growth)


# -- log-log fits -------------------------------------------------------------


@dataclass(frozen=True)
class LogLogFit:
    slope: float
    intercept: float
    stderr: float
    window: tuple[float, float]
    n_points: int
    full_slope: float
    full_stderr: float


def _ols_loglog(xs: np.ndarray, ys: np.ndarray) -> tuple[float, float, float]:
    lx = np.log(xs)
    ly = np.log(ys)
    mx = lx.mean()
    sxx = float(np.sum((lx - mx) ** 2))
    if sxx == 0:
        raise InvalidArgumentError("fit needs at least two distinct abscissae")
    slope = float(np.sum((lx - mx) * (ly - ly.mean())) / sxx)
    intercept = float(ly.mean() - slope * mx)
    resid = ly - (intercept + slope * lx)
    dof = xs.size - 2
    stderr = float(np.sqrt(np.sum(resid**2) / dof / sxx)) if dof > 0 else 0.0
    return slope, intercept, stderr


def fit_loglog(xs: Sequence[float], ys: Sequence[float], min_points: int = 2) -> LogLogFit:
    """Least-squares slope on logs, full range and with the smallest decade dropped.

    The windowed slope uses only abscissae above ten times the smallest,
    falling back to the full range when that leaves fewer than four
    points.  Values must be positive and abscissae strictly increasing.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.size != y.size or x.size < min_points:
        raise InvalidArgumentError(f"fit needs at least {min_points} matched points")
    if np.any(x <= 0) or np.any(np.diff(x) <= 0):
        raise InvalidArgumentError("abscissae must be positive and strictly increasing")
    if np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise InvalidArgumentError(
            "fit values must be positive and finite (series may be truncation-contaminated)"
        )
    full_slope, _, full_stderr = _ols_loglog(x, y)
    keep = x >= 10.0 * x[0]
    if keep.sum() < 4:
        keep = np.ones_like(keep)
    slope, intercept, stderr = _ols_loglog(x[keep], y[keep])
    return LogLogFit(
        slope=slope,
        intercept=intercept,
        stderr=stderr,
        window=(float(x[keep][0]), float(x[keep][-1])),
        n_points=int(keep.sum()),
        full_slope=full_slope,
        full_stderr=full_stderr,
    )


@dataclass(frozen=True)
class ExponentFit:
    value: float
    stderr: float
    window: tuple[float, float]
    n_points: int
    full_value: float
    full_stderr: float


def _exponent_fit(xs, ys, multiplier: float) -> ExponentFit:
    fit = fit_loglog(xs, ys, min_points=8)
    return ExponentFit(
        value=multiplier * fit.slope,
        stderr=abs(multiplier) * fit.stderr,
        window=fit.window,
        n_points=fit.n_points,
        full_value=multiplier * fit.full_slope,
        full_stderr=abs(multiplier) * fit.full_stderr,
    )


def fit_spectral_dimension(ns: Sequence[float], p2ns: Sequence[float]) -> ExponentFit:
    """Spectral dimension: -2 times the slope of log p_2n against log n."""
    return _exponent_fit(ns, p2ns, -2.0)


def fit_exit_exponent(radii: Sequence[float], mean_exit: Sequence[float]) -> ExponentFit:
    """Slope of log E[exit time] against log R."""
    return _exponent_fit(radii, mean_exit, 1.0)


def fit_range_exponent(ns: Sequence[float], mean_range: Sequence[float]) -> ExponentFit:
    """Slope of log E[measure of the visited set] against log n."""
    return _exponent_fit(ns, mean_range, 1.0)


def fit_displacement_exponent(ns: Sequence[float], mean_disp: Sequence[float]) -> ExponentFit:
    """Slope of log E[distance from the origin] against log n."""
    return _exponent_fit(ns, mean_disp, 1.0)


# -- ensemble aggregation ------------------------------------------------------


@dataclass(frozen=True)
class DecayFit:
    """Fitted polynomial decay of a failure-fraction curve."""

    rate: float
    lambdas: tuple[float, ...]
    fractions: tuple[float, ...]
    floored: bool


def failure_decay_fit(
    lambdas: Sequence[float], fractions: Sequence[float], ensemble_size: int
) -> DecayFit:
    """Fit -slope of log failure fraction against log tolerance.

    Zero counts fall below the resolution of the ensemble; the first zero
    entry is kept at the conventional floor 1/(2*ensemble) so the cliff
    into zero still informs the fit, and later zeros are dropped.
    """
    lam = np.asarray(lambdas, dtype=float)
    frac = np.asarray(fractions, dtype=float)
    if lam.size != frac.size or lam.size < 2:
        raise InvalidArgumentError("need at least two (tolerance, fraction) pairs")
    if np.any(frac < 0) or np.any(frac > 1):
        raise InvalidArgumentError("fractions must lie in [0, 1]")
    floor = 1.0 / (2.0 * ensemble_size)
    xs: list[float] = []
    ys: list[float] = []
    floored = False
    for lv, fv in zip(lam, frac):
        if fv > 0:
            xs.append(lv)
            ys.append(fv)
        else:
            xs.append(lv)
            ys.append(floor)
            floored = True
            break
    if len(xs) < 2:
        return DecayFit(math.inf, tuple(xs), tuple(ys), floored)
    slope, _, _ = _ols_loglog(np.asarray(xs), np.asarray(ys))
    return DecayFit(-slope, tuple(xs), tuple(ys), floored)


@dataclass(frozen=True)
class TightnessRow:
    theta: float
    exit_fraction: float
    kernel_fraction: float
    displacement_upper: float
    displacement_lower: float


def tightness_table(
    thetas: Sequence[float],
    exit_ratios: np.ndarray,
    kernel_ratios: np.ndarray,
    displacements: np.ndarray,
    scales: np.ndarray,
) -> list[TightnessRow]:
    """Worst-case-over-grid concentration fractions at each theta.

    exit_ratios and kernel_ratios hold per-graph observable/prediction
    ratios, one column per radius or time; displacements holds pooled
    per-trajectory distances with matching scale factors per column.
    Every column fraction is monotone in theta, hence so is the min.
    """
    exit_ratios = np.atleast_2d(np.asarray(exit_ratios, dtype=float))
    kernel_ratios = np.atleast_2d(np.asarray(kernel_ratios, dtype=float))
    displacements = np.atleast_2d(np.asarray(displacements, dtype=float))
    scales = np.asarray(scales, dtype=float)
    rows = []
    for theta in thetas:
        if not theta >= 1:
            raise InvalidArgumentError("theta must be at least 1")
        inv = 1.0 / theta
        band_exit = (exit_ratios >= inv) & (exit_ratios <= theta)
        band_kernel = (kernel_ratios >= inv) & (kernel_ratios <= theta)
        upper = displacements / scales < theta
        lower = (1.0 + displacements) / scales > inv
        rows.append(
            TightnessRow(
                theta=float(theta),
                exit_fraction=float(band_exit.mean(axis=0).min()),
                kernel_fraction=float(band_kernel.mean(axis=0).min()),
                displacement_upper=float(upper.mean(axis=0).min()),
                displacement_lower=float(lower.mean(axis=0).min()),
            )
        )
    return rows


def bootstrap_mean_ci(
    samples: np.ndarray, seed: int, n_resamples: int = 1000, level: float = 0.95
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Column means with percentile bootstrap bands over the rows."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    n = samples.shape[0]
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(n_resamples, n))
    means = samples[idx].mean(axis=1)
    tail = 100.0 * (1.0 - level) / 2.0
    lo = np.percentile(means, tail, axis=0)
    hi = np.percentile(means, 100.0 - tail, axis=0)
    return samples.mean(axis=0), lo, hi
