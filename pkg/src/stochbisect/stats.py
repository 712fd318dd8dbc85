"""Estimators used by the experiment harness.

Percentile-bootstrap and Wilson confidence intervals, the exact one-sample
Kolmogorov-Smirnov statistic against the uniform law, log-linear fits for
exponential decay, Pearson correlation matrices, and Q-Q plotting data.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .special import normal_quantile

__all__ = [
    "DegenerateSampleError",
    "IntervalEstimate",
    "bootstrap_mean_ci",
    "wilson_ci",
    "ks_statistic",
    "ks_critical_value",
    "fit_exponential_decay",
    "correlation_matrix",
    "qq_points",
]

BOOTSTRAP_PERCENTILE = "bootstrap_percentile"
WILSON = "wilson"

_BOOTSTRAP_CHUNK = 256

# Asymptotic quantiles of the Kolmogorov distribution, sup|B(t)| tail.
_KS_COEFFICIENTS = {0.10: 1.224, 0.05: 1.358, 0.02: 1.517, 0.01: 1.628}


class DegenerateSampleError(ValueError):
    """Input sample is empty, constant, or otherwise unusable."""


@dataclass(frozen=True)
class IntervalEstimate:
    """Point estimate with a two-sided confidence interval."""

    point: float
    lower: float
    upper: float
    level: float
    method: str

    def __post_init__(self):
        if not self.lower <= self.point <= self.upper:
            raise ValueError(
                f"interval must satisfy lower <= point <= upper, got "
                f"({self.lower}, {self.point}, {self.upper})"
            )

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def overlaps(self, lower: float, upper: float) -> bool:
        return self.lower <= upper and lower <= self.upper

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)


def bootstrap_mean_ci(
    samples: Sequence[float],
    level: float = 0.95,
    resamples: int = 2000,
    rng: np.random.Generator | None = None,
) -> IntervalEstimate:
    """Percentile-bootstrap CI for the mean.

    Resamples with replacement `resamples` times and takes the symmetric
    percentiles of the resampled means.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise DegenerateSampleError("bootstrap needs a nonempty sample")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    if resamples < 1:
        raise ValueError(f"resamples must be positive, got {resamples}")
    if rng is None:
        rng = np.random.default_rng()

    n = samples.size
    means = np.empty(resamples)
    # Chunked resampling keeps the index matrix small for large samples.
    for start in range(0, resamples, _BOOTSTRAP_CHUNK):
        stop = min(start + _BOOTSTRAP_CHUNK, resamples)
        idx = rng.integers(0, n, size=(stop - start, n))
        means[start:stop] = samples[idx].mean(axis=1)
    alpha = 0.5 * (1.0 - level)
    lower, upper = np.percentile(means, [100.0 * alpha, 100.0 * (1.0 - alpha)])
    point = float(samples.mean())
    return IntervalEstimate(point, min(float(lower), point), max(float(upper), point),
                            level, BOOTSTRAP_PERCENTILE)


def wilson_ci(successes: int, trials: int, level: float = 0.95) -> IntervalEstimate:
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    if not 0 <= successes <= trials:
        raise ValueError(f"need 0 <= successes <= trials, got {successes}/{trials}")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    z = normal_quantile(0.5 * (1.0 + level))
    p_hat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p_hat + z2 / (2.0 * trials)) / denom
    margin = (z / denom) * math.sqrt(
        p_hat * (1.0 - p_hat) / trials + z2 / (4.0 * trials * trials)
    )
    # The score interval always contains p_hat; guard the boundary cases
    # (0 or all successes) against last-ulp rounding of center - margin.
    lower = min(max(0.0, center - margin), p_hat)
    upper = max(min(1.0, center + margin), p_hat)
    return IntervalEstimate(p_hat, lower, upper, level, WILSON)


def ks_statistic(samples: Sequence[float]) -> float:
    """Exact sup_x |empirical CDF - x| against the uniform law on [0, 1]."""
    samples = np.sort(np.asarray(samples, dtype=float))
    if samples.size == 0:
        raise DegenerateSampleError("KS statistic needs a nonempty sample")
    m = samples.size
    i = np.arange(1, m + 1)
    return float(max(np.max(i / m - samples), np.max(samples - (i - 1) / m)))


def ks_critical_value(m: int, alpha: float = 0.01) -> float:
    """Asymptotic critical value c(alpha) / sqrt(m) of the one-sample KS test."""
    try:
        coefficient = _KS_COEFFICIENTS[alpha]
    except KeyError:
        raise ValueError(
            f"alpha must be one of {sorted(_KS_COEFFICIENTS)}, got {alpha}"
        ) from None
    return coefficient / math.sqrt(m)


def fit_exponential_decay(values: Sequence[float]) -> tuple[float, float]:
    """Least-squares fit of values[n] ~ C exp(-rho n); returns (rho, exp(-rho)).

    Fits a line through (n, log values[n]) over every value given.
    """
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise ValueError("need at least two values to fit a decay rate")
    if np.any(values <= 0.0):
        raise ValueError("exponential fit needs strictly positive values")
    n = np.arange(values.size)
    slope = np.polyfit(n, np.log(values), 1)[0]
    rho = -float(slope)
    return rho, math.exp(-rho)


def correlation_matrix(columns: Sequence[Sequence[float]]) -> np.ndarray:
    """Pearson correlation matrix of the given equal-length columns."""
    if len(columns) < 2:
        raise DegenerateSampleError("need at least two columns")
    arrays = [np.asarray(col, dtype=float) for col in columns]
    length = arrays[0].size
    if length < 2 or any(col.size != length for col in arrays):
        raise DegenerateSampleError("columns must share one length >= 2")
    data = np.vstack(arrays)
    if np.any(data.std(axis=1) == 0.0):
        raise DegenerateSampleError("every column needs nonzero variance")
    corr = np.corrcoef(data)
    return np.clip(corr, -1.0, 1.0)


def qq_points(samples: Sequence[float]) -> list[tuple[float, float]]:
    """Uniform Q-Q data: ((i - 0.5) / M, i-th order statistic) pairs."""
    samples = np.sort(np.asarray(samples, dtype=float))
    if samples.size == 0:
        raise DegenerateSampleError("Q-Q plot needs a nonempty sample")
    m = samples.size
    positions = (np.arange(1, m + 1) - 0.5) / m
    return list(zip(positions.tolist(), samples.tolist()))
