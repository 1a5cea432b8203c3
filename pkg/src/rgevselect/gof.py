"""Goodness-of-fit statistics: Cramer-von Mises and Mann-Kendall."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import gammaln, kve

__all__ = [
    "CvmResult",
    "cvm_statistic",
    "cvm_pvalue",
    "cvm_test",
    "uniform_cdf",
    "exp1_cdf",
    "MannKendallResult",
    "mann_kendall",
]


@dataclass(frozen=True)
class CvmResult:
    """Cramer-von Mises statistic T = n * omega^2 with optional p-value."""

    statistic: float
    pvalue: float | None
    n: int


def uniform_cdf(u):
    """CDF of the uniform(0, 1) reference distribution."""
    return np.clip(np.asarray(u, dtype=float), 0.0, 1.0)


def exp1_cdf(x):
    """CDF of the unit-mean exponential reference distribution."""
    arr = np.asarray(x, dtype=float)
    return np.where(arr > 0.0, -np.expm1(-arr), 0.0)


def cvm_statistic(values, cdf: Callable[[np.ndarray], np.ndarray]) -> CvmResult:
    """Cramer-von Mises statistic against a fully specified distribution.

    T = 1/(12n) + sum_i [ (2i - 1)/(2n) - G(y_(i)) ]^2 over the sorted sample.
    """
    y = np.sort(np.asarray(values, dtype=float))
    if y.size == 0:
        raise ValueError("values must be non-empty.")
    if not np.all(np.isfinite(y)):
        raise ValueError("values must be finite.")
    n = y.size
    g = np.asarray(cdf(y), dtype=float)
    if np.any(g < -1e-12) or np.any(g > 1.0 + 1e-12):
        raise ValueError("cdf must map into [0, 1].")
    g = np.clip(g, 0.0, 1.0)
    i = np.arange(1, n + 1)
    stat = 1.0 / (12.0 * n) + np.sum(((2.0 * i - 1.0) / (2.0 * n) - g) ** 2)
    return CvmResult(statistic=float(stat), pvalue=None, n=n)


def _cvm_limit_cdf(x: float) -> float:
    """CDF of the limiting null distribution of T, by its Bessel-K series.

    The exponentially scaled kve keeps small-x terms from underflowing to
    nan; terms are added until they drop below 1e-12.
    """
    if x <= 0.0:
        return 0.0
    total = 0.0
    sqrt_x = math.sqrt(x)
    for j in range(400):
        y = 4.0 * j + 1.0
        q = y * y / (16.0 * x)
        coef = math.exp(gammaln(j + 0.5) - gammaln(j + 1.0)) / (math.pi**1.5 * sqrt_x)
        term = coef * math.sqrt(y) * math.exp(-2.0 * q) * float(kve(0.25, q))
        total += term
        if term < 1e-12:
            break
    return min(total, 1.0)


def cvm_pvalue(statistic: float, n: int | None = None) -> float:
    """Upper-tail p-value of the Cramer-von Mises statistic.

    The asymptotic null distribution is used for every sample size (no
    small-sample correction); `n` is accepted for interface symmetry only.
    """
    statistic = float(statistic)
    if not math.isfinite(statistic) or statistic < 0.0:
        raise ValueError(f"statistic must be >= 0, got {statistic!r}.")
    return min(max(1.0 - _cvm_limit_cdf(statistic), 0.0), 1.0)


def cvm_test(values, cdf: Callable[[np.ndarray], np.ndarray]) -> CvmResult:
    """Statistic and p-value in one step."""
    res = cvm_statistic(values, cdf)
    return CvmResult(statistic=res.statistic, pvalue=cvm_pvalue(res.statistic, res.n), n=res.n)


class MannKendallResult(NamedTuple):
    s: int
    pvalue: float


def mann_kendall(series) -> MannKendallResult:
    """Mann-Kendall trend test.

    S = sum_{i<j} sign(x_j - x_i); the two-sided p-value uses the normal
    approximation with tie-corrected variance and continuity correction.
    Needs at least 4 observations.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or x.size < 4:
        raise ValueError("mann_kendall needs a 1-d series of length >= 4.")
    if not np.all(np.isfinite(x)):
        raise ValueError("series must be finite.")
    n = x.size
    signs = np.sign(x[None, :] - x[:, None])
    s = int(signs[np.triu_indices(n, 1)].sum())
    _, counts = np.unique(x, return_counts=True)
    tie_term = np.sum(counts * (counts - 1) * (2 * counts + 5))
    var = (n * (n - 1) * (2 * n + 5) - tie_term) / 18.0
    if var <= 0.0 or s == 0:
        return MannKendallResult(s=s, pvalue=1.0)
    z = (s - 1.0) / math.sqrt(var) if s > 0 else (s + 1.0) / math.sqrt(var)
    pvalue = math.erfc(abs(z) / math.sqrt(2.0))
    return MannKendallResult(s=s, pvalue=min(pvalue, 1.0))
