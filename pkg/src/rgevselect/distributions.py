"""GEV / r-largest GEV / Wakeby distribution kernels.

The shape parameter k follows the Hosking sign convention throughout:
``w(x) = 1 - k * (x - mu) / sigma`` with support ``w > 0``, so k < 0 is the
heavy-tailed (Frechet) domain and k > 0 gives a bounded upper tail.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: |k| below this threshold is treated as the Gumbel limit (1/k overflows).
GUMBEL_EPS = 1e-9

EULER_GAMMA = 0.5772156649015329

__all__ = [
    "GUMBEL_EPS",
    "EULER_GAMMA",
    "GevParams",
    "NsGevParams",
    "WakebyParams",
    "gev_cdf",
    "gev_quantile",
    "rgev_loglik_blocks",
    "rgev_negloglik",
    "digamma",
    "wakeby_quantile",
]


@dataclass(frozen=True)
class GevParams:
    """GEV location/scale/shape triple (Hosking convention).

    Parameters
    ----------
    mu : float
        Location, in data units.
    sigma : float
        Scale, in data units; must be positive.
    k : float
        Shape; k = 0 is the Gumbel case.
    """

    mu: float
    sigma: float
    k: float

    def __post_init__(self):
        for name in ("mu", "sigma", "k"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"GEV parameter {name} must be finite, got {v!r}.")
            object.__setattr__(self, name, v)
        if self.sigma <= 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}.")

    def loc(self, t=None):
        """Location at time t (constant for the stationary model)."""
        return self.mu

    def scale(self, t=None):
        """Scale at time t (constant for the stationary model)."""
        return self.sigma


@dataclass(frozen=True)
class NsGevParams:
    """Nonstationary GEV parameters: linear-in-time location, log-linear scale.

    mu(t) = mu0 + mu1 * t and sigma(t) = exp(sigma0 + sigma1 * t) with a
    time-constant shape k.  Setting mu1 = sigma1 = 0 embeds the stationary
    model with mu = mu0 and sigma = exp(sigma0).
    """

    mu0: float
    mu1: float
    sigma0: float
    sigma1: float
    k: float

    def __post_init__(self):
        for name in ("mu0", "mu1", "sigma0", "sigma1", "k"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"parameter {name} must be finite, got {v!r}.")
            object.__setattr__(self, name, v)

    def loc(self, t):
        return self.mu0 + self.mu1 * np.asarray(t, dtype=float)

    def scale(self, t):
        return np.exp(self.sigma0 + self.sigma1 * np.asarray(t, dtype=float))

    @property
    def is_stationary(self) -> bool:
        return self.mu1 == 0.0 and self.sigma1 == 0.0

    def to_stationary(self) -> GevParams:
        """Collapse to GevParams; only valid when both slopes are zero."""
        if not self.is_stationary:
            raise ValueError("slopes are nonzero; model is not stationary.")
        return GevParams(mu=self.mu0, sigma=math.exp(self.sigma0), k=self.k)


def _wakeby_q(p, xi, alpha, beta, gamma, delta):
    """Wakeby quantile kernel on validated arrays, with beta/delta -> 0 limits."""
    q = 1.0 - p
    if beta != 0.0:
        first = (alpha / beta) * (1.0 - q**beta)
    else:
        first = -alpha * np.log(q)
    if delta != 0.0:
        second = (gamma / delta) * (1.0 - q ** (-delta))
    else:
        second = gamma * np.log(q)
    return xi + first - second


@dataclass(frozen=True)
class WakebyParams:
    """Wakeby parameters in the Hosking-Wallis reparametrized quantile form.

    x(p) = xi + (alpha/beta) * (1 - (1-p)^beta)
              - (gamma/delta) * (1 - (1-p)^(-delta))

    Validity is checked by requiring the quantile function to be
    non-decreasing on a dense grid of (0, 1).
    """

    xi: float
    alpha: float
    beta: float
    gamma: float
    delta: float

    def __post_init__(self):
        vals = (self.xi, self.alpha, self.beta, self.gamma, self.delta)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("Wakeby parameters must be finite.")
        grid = np.linspace(1e-6, 1.0 - 1e-6, 1001)
        qx = _wakeby_q(grid, *vals)
        if not np.all(np.isfinite(qx)) or np.any(np.diff(qx) < -1e-12):
            raise ValueError(
                "Wakeby parameters do not give a non-decreasing quantile "
                "function on (0, 1)."
            )


def _as_finite_array(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite.")
    return arr


def gev_cdf(x, params: GevParams):
    """GEV distribution function.

    Out-of-support x maps to the nearest boundary value (0 below a lower
    endpoint, 1 above an upper endpoint) instead of raising, so bootstrap
    refits can probe past a fitted support edge.

    Returns a float for scalar x, an ndarray otherwise.
    """
    arr = _as_finite_array(x, "x")
    z = (arr - params.mu) / params.sigma
    k = params.k
    if abs(k) < GUMBEL_EPS:
        out = np.exp(-np.exp(-z))
    else:
        kz = k * np.asarray(z)
        boundary = 1.0 if k > 0 else 0.0
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            lw = np.log1p(-kz, out=np.zeros_like(kz), where=kz < 1.0)
            out = np.where(kz < 1.0, np.exp(-np.exp(lw / k)), boundary)
    return float(out) if arr.ndim == 0 else out


def _gev_quantile_kernel(p, loc, scale, k):
    """Inverse CDF on arrays; loc/scale may vary per element (broadcastable)."""
    log_ln_p = np.log(-np.log(p))
    if abs(k) < GUMBEL_EPS:
        return loc - scale * log_ln_p
    # 1 - (-ln p)^k = -expm1(k log(-ln p)), exact through k -> 0
    return loc - scale * np.expm1(k * log_ln_p) / k


def gev_quantile(p, params: GevParams):
    """GEV quantile (inverse of :func:`gev_cdf`); requires 0 < p < 1."""
    arr = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any((arr <= 0.0) | (arr >= 1.0)):
        raise ValueError("p must lie strictly inside (0, 1).")
    out = _gev_quantile_kernel(arr, params.mu, params.sigma, params.k)
    return float(out) if arr.ndim == 0 else out


def rgev_loglik_blocks(values, loc, scale, k) -> np.ndarray:
    """Per-block log density of the joint top-r GEV model.

    Parameters
    ----------
    values : array, shape (n, r)
        Order statistics, rows non-increasing left to right.
    loc, scale : float or array of shape (n,)
        Location and scale, possibly varying by block (time).
    k : float
        Shape parameter.

    Returns
    -------
    ndarray of shape (n,); blocks that violate the support w > 0 get -inf.
    """
    x = np.asarray(values, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n, r = x.shape
    if np.ndim(loc) == 0 and np.ndim(scale) == 0:
        loc = float(loc)
        scale = float(scale)
        if scale <= 0.0:
            return np.full(n, -np.inf)
        z = (x - loc) * (1.0 / scale)
        log_scale_term = r * math.log(scale)
    else:
        loc = np.asarray(loc, dtype=float).reshape(n, 1)
        scale = np.asarray(scale, dtype=float).reshape(n, 1)
        if np.any(scale <= 0.0):
            return np.full(n, -np.inf)
        z = (x - loc) / scale
        log_scale_term = r * np.log(scale[:, 0])
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        if abs(k) < GUMBEL_EPS:
            return -log_scale_term - np.exp(-z[:, -1]) - z.sum(axis=1)
        kz = k * z
        bad = (kz >= 1.0).any(axis=1)
        # log1p keeps log(1 - k z) exact as k -> 0, so the two branches meet
        lw = np.log1p(-kz, out=np.zeros_like(kz), where=kz < 1.0)
        ll = -log_scale_term - np.exp(lw[:, -1] / k) + (1.0 / k - 1.0) * lw.sum(axis=1)
    if bad.any():
        ll[bad] = -np.inf
    return ll


def rgev_negloglik(sample, params, r: int) -> float:
    """Negative log-likelihood of the top-r columns of a sample.

    `params` may be GevParams or NsGevParams (the latter requires the sample
    to carry a time index).  Returns +inf when the support constraint fails
    for any block, so minimizers see an infinite barrier rather than an error.
    """
    values = sample.values
    if not 1 <= r <= values.shape[1]:
        raise ValueError(f"r must be in [1, {values.shape[1]}], got {r}.")
    t = sample.time_index() if isinstance(params, NsGevParams) else None
    ll = rgev_loglik_blocks(values[:, :r], params.loc(t), params.scale(t), params.k)
    return float(-ll.sum())


# Coefficients of the asymptotic series psi(z) ~ ln z - 1/(2z) - sum c_m / z^(2m),
# c_m = B_{2m} / (2m) with Bernoulli numbers B.
_DIGAMMA_TAIL = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
)


def digamma(z: float) -> float:
    """Digamma function for z > 0.

    Upward recurrence psi(z+1) = psi(z) + 1/z is applied until the argument
    reaches 6, then the 8-term asymptotic series; absolute error is below
    1e-10 on the positive axis.
    """
    z = float(z)
    if not math.isfinite(z) or z <= 0.0:
        raise ValueError(f"digamma requires z > 0, got {z!r}.")
    acc = 0.0
    while z < 6.0:
        acc -= 1.0 / z
        z += 1.0
    inv2 = 1.0 / (z * z)
    tail = 0.0
    power = inv2
    for c in _DIGAMMA_TAIL:
        tail += c * power
        power *= inv2
    return acc + math.log(z) - 0.5 / z - tail


def wakeby_quantile(p, params: WakebyParams):
    """Wakeby quantile function; requires 0 < p < 1.

    beta = 0 and delta = 0 fall back to their logarithmic limits.
    """
    arr = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any((arr <= 0.0) | (arr >= 1.0)):
        raise ValueError("p must lie strictly inside (0, 1).")
    out = _wakeby_q(arr, params.xi, params.alpha, params.beta, params.gamma, params.delta)
    return float(out) if arr.ndim == 0 else out
