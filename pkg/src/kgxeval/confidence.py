"""Confidence intervals for bucket and overall metric values.

Two methods, both operating on the per-example metric values of a bucket
(hit indicators, reciprocal ranks, or ranks):

- percentile bootstrap over resampled means, deterministic under a seed;
- Student-t interval ``mean +/- t * s / sqrt(n)``.

Defaults (level 0.95, 1000 resamples, minimum bucket size 5) are
implementation choices; each is configurable.  Buckets too small for a
method yield "no interval" (``None``) rather than an error, so reports can
mark them absent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as _scipy_stats

from kgxeval.errors import DataError

DEFAULT_LEVEL = 0.95
DEFAULT_RESAMPLES = 1000
DEFAULT_MIN_BUCKET_SIZE = 5

# resamples are drawn in chunks with independently spawned substreams, so
# results do not depend on how chunks are scheduled across workers
_CHUNK = 100


@dataclass(frozen=True)
class ConfidenceInterval:
    low: float
    high: float
    level: float
    method: str  # "bootstrap" | "t-test"
    n: int

    def __post_init__(self):
        if not 0.0 < self.level < 1.0:
            raise DataError("confidence level must be in (0, 1)")
        if self.low > self.high:
            raise DataError("interval low must not exceed high")

    def to_dict(self) -> dict:
        return {"low": self.low, "high": self.high, "level": self.level,
                "method": self.method, "n": self.n}

    @classmethod
    def from_dict(cls, d: dict) -> "ConfidenceInterval":
        return cls(low=d["low"], high=d["high"], level=d["level"],
                   method=d["method"], n=d["n"])


@dataclass(frozen=True)
class CiConfig:
    """CI settings as wired through the CLI/HTTP surfaces."""

    method: str = "bootstrap"  # "bootstrap" | "ttest" | "none"
    level: float = DEFAULT_LEVEL
    n_resamples: int = DEFAULT_RESAMPLES
    seed: int = 0
    min_bucket_size: int = DEFAULT_MIN_BUCKET_SIZE

    def __post_init__(self):
        if self.method not in ("bootstrap", "ttest", "none"):
            raise DataError(f"unknown CI method {self.method!r}")
        if not 0.0 < self.level < 1.0:
            raise DataError("ci level must be in (0, 1)")

    def interval(self, values) -> ConfidenceInterval | None:
        if self.method == "none":
            return None
        if self.method == "bootstrap":
            return bootstrap_ci(values, level=self.level,
                                n_resamples=self.n_resamples, seed=self.seed,
                                min_size=self.min_bucket_size)
        return t_interval(values, level=self.level)


def bootstrap_ci(
    values,
    level: float = DEFAULT_LEVEL,
    n_resamples: int = DEFAULT_RESAMPLES,
    seed: int = 0,
    min_size: int = DEFAULT_MIN_BUCKET_SIZE,
) -> ConfidenceInterval | None:
    """Percentile bootstrap interval for the mean of ``values``.

    Draws ``n_resamples`` with-replacement resamples, takes their means, and
    returns the (1-level)/2 and 1-(1-level)/2 empirical quantiles, widened if
    necessary to contain the point estimate.  Deterministic under ``seed``.
    Returns None for buckets smaller than ``min_size``.
    """
    vals = np.asarray(values, dtype=np.float64)
    if vals.size < min_size:
        return None
    if n_resamples < 100:
        raise DataError("n_resamples must be >= 100")
    n = vals.size
    means = np.empty(n_resamples, dtype=np.float64)
    seeds = np.random.SeedSequence(seed).spawn((n_resamples + _CHUNK - 1) // _CHUNK)
    pos = 0
    for child in seeds:
        take = min(_CHUNK, n_resamples - pos)
        rng = np.random.Generator(np.random.PCG64(child))
        idx = rng.integers(0, n, size=(take, n))
        means[pos : pos + take] = vals[idx].mean(axis=1)
        pos += take
    alpha = (1.0 - level) / 2.0
    low = float(np.quantile(means, alpha))
    high = float(np.quantile(means, 1.0 - alpha))
    point = float(vals.mean())
    low, high = min(low, point), max(high, point)
    return ConfidenceInterval(low=low, high=high, level=level,
                              method="bootstrap", n=n)


def t_interval(values, level: float = DEFAULT_LEVEL) -> ConfidenceInterval | None:
    """Student-t interval for the mean: ``mean +/- t_{alpha/2, n-1} * s / sqrt(n)``.

    Uses the sample standard deviation (ddof=1).  Returns None for n < 2.
    The raw interval is not clamped here; metric-domain clamping happens at
    report time.
    """
    vals = np.asarray(values, dtype=np.float64)
    n = vals.size
    if n < 2:
        return None
    mean = float(vals.mean())
    s = float(vals.std(ddof=1))
    quantile = float(_scipy_stats.t.ppf(1.0 - (1.0 - level) / 2.0, df=n - 1))
    half = quantile * s / np.sqrt(n)
    return ConfidenceInterval(low=mean - half, high=mean + half, level=level,
                              method="t-test", n=int(n))
