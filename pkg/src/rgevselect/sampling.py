"""Random generation of r-largest order statistics samples.

All generators accept `seed` as an int, numpy SeedSequence or Generator and
are bit-reproducible for a fixed seed.
"""
from __future__ import annotations

import numpy as np

from .distributions import GevParams, NsGevParams, WakebyParams, _gev_quantile_kernel, _wakeby_q
from .rlos import RLosSample

__all__ = ["sample_rgev", "sample_rgev11", "sample_wakeby_rlos", "contaminate"]

_OPEN_LOW = np.nextafter(0.0, 1.0)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _rlos_from_uniform_products(u: np.ndarray, loc, scale, k) -> np.ndarray:
    """Top-R values from cumulative-product uniforms via the inverse CDF.

    W_{t,j} = prod_{l<=j} U_{t,l} is non-increasing in j, so the monotone
    quantile map yields non-increasing rows.
    """
    w = np.cumprod(u, axis=1)
    loc = np.asarray(loc, dtype=float)
    scale = np.asarray(scale, dtype=float)
    if loc.ndim == 1:
        loc = loc[:, None]
    if scale.ndim == 1:
        scale = scale[:, None]
    return _gev_quantile_kernel(w, loc, scale, k)


def sample_rgev(n: int, n_orders: int, params: GevParams, seed=None) -> RLosSample:
    """Sample n blocks of the top `n_orders` statistics from a stationary rGEV."""
    if n < 1 or n_orders < 1:
        raise ValueError("n and n_orders must be >= 1.")
    rng = _rng(seed)
    u = rng.uniform(_OPEN_LOW, 1.0, size=(n, n_orders))
    values = _rlos_from_uniform_products(u, params.mu, params.sigma, params.k)
    return RLosSample(values)


def sample_rgev11(n: int, n_orders: int, params: NsGevParams, seed=None) -> RLosSample:
    """Sample from the nonstationary rGEV11 model at t = 1..n.

    Per block: draw uniforms U_{t,1..R}, form the cumulative products
    W_{t,j}, then invert the time-t GEV CDF at each W_{t,j}.  The stationary
    model is the special case mu1 = sigma1 = 0.
    """
    if n < 1 or n_orders < 1:
        raise ValueError("n and n_orders must be >= 1.")
    rng = _rng(seed)
    t = np.arange(1, n + 1)
    u = rng.uniform(_OPEN_LOW, 1.0, size=(n, n_orders))
    values = _rlos_from_uniform_products(u, params.loc(t), params.scale(t), params.k)
    return RLosSample(values, time=t)


def sample_wakeby_rlos(
    n: int, n_orders: int, params: WakebyParams, block_size: int = 100, seed=None
) -> RLosSample:
    """Top `n_orders` of `block_size` i.i.d. Wakeby draws, per block.

    This gives exact finite-sample order statistics of the Wakeby population
    (no limiting approximation); block_size must be >= n_orders.
    """
    if n < 1 or n_orders < 1:
        raise ValueError("n and n_orders must be >= 1.")
    if block_size < n_orders:
        raise ValueError(
            f"block_size ({block_size}) must be >= n_orders ({n_orders})."
        )
    rng = _rng(seed)
    u = rng.uniform(_OPEN_LOW, 1.0, size=(n, block_size))
    x = _wakeby_q(u, params.xi, params.alpha, params.beta, params.gamma, params.delta)
    x.sort(axis=1)
    values = x[:, ::-1][:, :n_orders]
    return RLosSample(np.ascontiguousarray(values))


def contaminate(sample: RLosSample, true_r: int, mixing_p: float) -> RLosSample:
    """Corrupt orders true_r+1 .. R-1 by mixing each with its next neighbour.

    x^(j) <- mixing_p * x^(j) + (1 - mixing_p) * x^(j+1), computed from the
    original values for every j, so rows stay non-increasing for any
    mixing_p in [0, 1].  mixing_p = 1 leaves the sample unchanged.
    """
    if not 0.0 <= mixing_p <= 1.0:
        raise ValueError(f"mixing_p must be in [0, 1], got {mixing_p}.")
    R = sample.n_orders
    if not 1 <= true_r <= R - 1:
        raise ValueError(f"true_r must satisfy true_r + 1 <= R (= {R}), got {true_r}.")
    x = sample.values
    out = x.copy()
    out[:, true_r : R - 1] = mixing_p * x[:, true_r : R - 1] + (1.0 - mixing_p) * x[:, true_r + 1 : R]
    return RLosSample(out, time=sample.time, units=sample.units)
