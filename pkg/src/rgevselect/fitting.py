"""Maximum (penalized) likelihood fitting of stationary rGEV and rGEV11.

Optimization runs on centred/scaled data with the scale parameter on the log
axis; one Nelder-Mead pass plus a restart from its best point.  Results are
reported in the original data units; convergence is declared from the
max-norm of the numerical gradient on the standardized scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .distributions import EULER_GAMMA, GevParams, NsGevParams, rgev_loglik_blocks
from .distributions import rgev_negloglik as rgev_negloglik_of
from .exceptions import DegenerateDataError, NumericalError
from .rlos import RLosSample

__all__ = [
    "FitResult",
    "coles_dixon_penalty",
    "initial_params",
    "fit_rgev",
    "fit_rgev11",
    "fixed_fit",
    "score_and_info",
]

#: max |gradient| of the standardized objective below which a fit counts as converged
GRAD_TOL = 1e-4

_NM_OPTIONS = {"xatol": 1e-8, "fatol": 1e-9, "maxiter": 4000, "maxfev": 8000}

#: finite stand-in for +inf inside simplex objectives (keeps NM comparisons clean)
_BIG = 1e12


@dataclass
class FitResult:
    """Outcome of one likelihood fit.

    `score` and `info` are the numerical gradient of the log-objective
    (i.e. minus the gradient of the minimized objective) and the numerical
    Hessian of the minimized objective, both on the reported parameter
    scale; `nll` is the minimized objective (penalized when requested).
    """

    params: GevParams | NsGevParams
    nll: float
    penalized: bool
    converged: bool
    iterations: int
    score: np.ndarray
    info: np.ndarray
    r: int
    n_blocks: int
    model: str
    grad_max_std: float
    message: str = ""


def coles_dixon_penalty(k: float, alpha: float = 1.0, lam: float = 1.0) -> float:
    """Shape-parameter penalty p(k), expressed in the Hosking sign convention.

    p(k) = 1 for k >= 0, exp(-lam * (-k / (1 + k))**alpha) for -1 < k < 0,
    and 0 for k <= -1, so heavy tails beyond k = -1 are excluded and the
    region around k <= -0.5 is damped.
    """
    if k >= 0.0:
        return 1.0
    if k <= -1.0:
        return 0.0
    return math.exp(-lam * (-k / (1.0 + k)) ** alpha)


def _neg_log_penalty(k: float, alpha: float, lam: float) -> float:
    if k >= 0.0:
        return 0.0
    if k <= -1.0:
        return math.inf
    return lam * (-k / (1.0 + k)) ** alpha


def _column_moments(col: np.ndarray) -> tuple[float, float]:
    mean = float(col.mean())
    sd = float(col.std(ddof=1)) if col.size > 1 else 0.0
    return mean, sd


def _gumbel_moment_params(col: np.ndarray) -> tuple[float, float]:
    """Method-of-moments Gumbel location/scale from a single column."""
    mean, sd = _column_moments(col)
    sigma = sd * math.sqrt(6.0) / math.pi
    mu = mean - EULER_GAMMA * sigma
    return mu, sigma


def initial_params(sample: RLosSample, r: int) -> GevParams:
    """Starting point for the optimizer: Gumbel moments of column 1, k = 0.01.

    Falls back to k = 0 if the near-Gumbel shape would put any column-1
    value outside the support.
    """
    values = sample.values
    if values.shape[0] < 2:
        raise DegenerateDataError("need at least 2 blocks for initial estimates.")
    if not 1 <= r <= values.shape[1]:
        raise ValueError(f"r must be in [1, {values.shape[1]}], got {r}.")
    col1 = values[:, 0]
    mu, sigma = _gumbel_moment_params(col1)
    if sigma <= 0.0:
        raise DegenerateDataError("column 1 has zero variance; cannot initialize.")
    k = 0.01
    if np.any(1.0 - k * (col1 - mu) / sigma <= 0.0):
        k = 0.0
    return GevParams(mu=mu, sigma=sigma, k=k)


def _initial_simplex(x0: np.ndarray, steps: np.ndarray) -> np.ndarray:
    sim = np.tile(x0, (x0.size + 1, 1))
    for j in range(x0.size):
        sim[j + 1, j] += steps[j]
    return sim


def _run_simplex(objective, x0, steps) -> tuple[np.ndarray, float, int, bool]:
    """One Nelder-Mead pass plus a restart from its best point."""
    x0 = np.asarray(x0, dtype=float)
    steps = np.asarray(steps, dtype=float)
    opts = dict(_NM_OPTIONS, initial_simplex=_initial_simplex(x0, steps))
    first = minimize(objective, x0, method="Nelder-Mead", options=opts)
    opts = dict(_NM_OPTIONS, initial_simplex=_initial_simplex(np.asarray(first.x, float), 0.1 * steps))
    second = minimize(objective, first.x, method="Nelder-Mead", options=opts)
    best = second if second.fun <= first.fun else first
    iterations = int(first.nit) + int(second.nit)
    return np.asarray(best.x, dtype=float), float(best.fun), iterations, bool(best.success)


def _stationarity_check(
    objective, theta, f0, k_index, kinked, k_value=None, k_step=1.0
) -> tuple[float, bool]:
    """Max-norm of the central gradient plus a kink-aware convergence verdict.

    The Coles-Dixon penalty is non-differentiable at k = 0; when the optimum
    sits on the kink, first-order minimality is judged from the one-sided
    slopes of the shape coordinate instead of its central difference.
    `k_value`/`k_step` locate the kink when the optimizer works in rescaled
    coordinates.
    """
    try:
        grad, f_plus, f_minus, h = _central_gradient(
            objective, theta, 1e-5 * np.maximum(1.0, np.abs(theta))
        )
    except NumericalError:
        return math.inf, False
    grad_max = float(np.max(np.abs(grad)))
    others = np.delete(np.abs(grad), k_index)
    ok_others = bool(np.all(others <= GRAD_TOL)) if others.size else True
    ok_k = abs(grad[k_index]) <= GRAD_TOL
    if k_value is None:
        k_value = theta[k_index]
    if not ok_k and kinked and abs(k_value) <= k_step * h[k_index]:
        d_plus = (f_plus[k_index] - f0) / h[k_index]
        d_minus = (f_minus[k_index] - f0) / h[k_index]
        ok_k = d_plus >= -GRAD_TOL and d_minus >= -GRAD_TOL
    return grad_max, bool(ok_others and ok_k)


def _refine_at_kink(objective, theta, f_val, k_index, k_pin):
    """Re-optimize the smooth coordinates with the shape pinned to the kink.

    Simplex + Newton cannot converge the other parameters once the shape
    coordinate sits on the penalty kink (the kink wrecks the Hessian row),
    so optimize the subspace with the shape fixed at exactly the kink value.
    """
    idx = [j for j in range(theta.size) if j != k_index]
    base = theta.copy()
    base[k_index] = k_pin

    def sub(phi):
        t = base.copy()
        t[idx] = phi
        return objective(t)

    phi0 = base[idx]
    res = minimize(
        sub, phi0, method="Nelder-Mead",
        options=dict(_NM_OPTIONS, initial_simplex=_initial_simplex(phi0, np.full(phi0.size, 0.1))),
    )
    phi, f_sub = np.asarray(res.x, float), float(res.fun)
    phi, f_sub = _newton_polish(sub, phi, f_sub)
    if f_sub <= f_val:
        out = base.copy()
        out[idx] = phi
        return out, f_sub
    return theta, f_val


def _newton_polish(objective, theta, f_val, max_steps=4):
    """Damped Newton steps from the simplex endpoint.

    Cheap insurance when the curvature is much larger than the simplex
    tolerance can resolve; every step must decrease the objective or the
    polish stops.
    """
    theta = theta.copy()
    for _ in range(max_steps):
        try:
            score, info = score_and_info(objective, theta)
        except NumericalError:
            break
        if not (np.all(np.isfinite(score)) and np.all(np.isfinite(info))):
            break
        # score = -grad(f), so the Newton descent step is +info^{-1} score
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)):
            break
        improved = False
        for damp in (1.0, 0.5, 0.25, 0.1):
            cand = theta + damp * step
            f_cand = float(objective(cand))
            if f_cand < f_val:
                theta, f_val = cand, f_cand
                improved = True
                break
        if not improved:
            break
    return theta, f_val


def _central_gradient(objective, theta, h):
    """Central-difference gradient with the shrink-once-then-error policy.

    Returns (grad, f_plus, f_minus, h_used) so Hessian diagonals can reuse
    the probes.
    """
    p = theta.size
    grad = np.empty(p)
    f_plus = np.empty(p)
    f_minus = np.empty(p)
    h = h.copy()
    for j in range(p):
        for attempt in range(2):
            e = np.zeros(p)
            e[j] = h[j]
            fp = float(objective(theta + e))
            fm = float(objective(theta - e))
            if math.isfinite(fp) and math.isfinite(fm):
                break
            if attempt == 1:
                raise NumericalError(
                    f"objective not finite near component {j} even after shrinking the step."
                )
            h[j] /= 10.0
        f_plus[j] = fp
        f_minus[j] = fm
        grad[j] = (fp - fm) / (2.0 * h[j])
    return grad, f_plus, f_minus, h


def score_and_info(objective: Callable, theta_hat) -> tuple[np.ndarray, np.ndarray]:
    """Numerical score vector and observed information at theta_hat.

    Central differences with steps h_j = 1e-5 * max(1, |theta_j|); the score
    is minus the gradient of the (negative log-likelihood) objective and the
    information is its symmetrized Hessian.  A probe point with an infinite
    objective triggers one step shrink, then NumericalError.
    """
    theta = np.asarray(theta_hat, dtype=float)
    if theta.ndim != 1:
        raise ValueError("theta_hat must be a 1-d parameter vector.")
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta_hat must be finite.")
    f0 = float(objective(theta))
    if not math.isfinite(f0):
        raise NumericalError("objective is not finite at theta_hat.")
    p = theta.size
    h0 = 1e-5 * np.maximum(1.0, np.abs(theta))
    grad, f_plus, f_minus, h = _central_gradient(objective, theta, h0)
    hess = np.empty((p, p))
    for j in range(p):
        hess[j, j] = (f_plus[j] - 2.0 * f0 + f_minus[j]) / (h[j] * h[j])
    for j in range(p):
        for l in range(j + 1, p):
            hj, hl = h[j], h[l]
            for attempt in range(2):
                ej = np.zeros(p)
                el = np.zeros(p)
                ej[j] = hj
                el[l] = hl
                fpp = float(objective(theta + ej + el))
                fpm = float(objective(theta + ej - el))
                fmp = float(objective(theta - ej + el))
                fmm = float(objective(theta - ej - el))
                if all(map(math.isfinite, (fpp, fpm, fmp, fmm))):
                    break
                if attempt == 1:
                    raise NumericalError(
                        f"objective not finite near components ({j}, {l}) "
                        "even after shrinking the step."
                    )
                hj /= 10.0
                hl /= 10.0
            hess[j, l] = hess[l, j] = (fpp - fpm - fmp + fmm) / (4.0 * hj * hl)
    info = 0.5 * (hess + hess.T)
    return -grad, info


def fixed_fit(sample: RLosSample, r: int, params: GevParams | NsGevParams) -> FitResult:
    """FitResult wrapper around externally known parameters (no optimization).

    Lets the goodness-of-fit tests run with true or user-supplied parameters
    instead of per-sample MLEs, e.g. for oracle checks.
    """
    p = 5 if isinstance(params, NsGevParams) else 3
    return FitResult(
        params=params,
        nll=rgev_negloglik_of(sample, params, r),
        penalized=False,
        converged=True,
        iterations=0,
        score=np.zeros(p),
        info=np.eye(p),
        r=r,
        n_blocks=sample.n_blocks,
        model="rgev11" if isinstance(params, NsGevParams) else "rgev",
        grad_max_std=0.0,
        message="fixed parameters (no fit)",
    )


def _standardize(x: np.ndarray) -> tuple[np.ndarray, float, float]:
    c = float(x.mean())
    d = float(x.std())
    if d <= 0.0:
        raise DegenerateDataError("all values are equal; likelihood is degenerate.")
    return (x - c) / d, c, d


def _nan_fallback(p: int) -> tuple[np.ndarray, np.ndarray]:
    return np.full(p, np.nan), np.full((p, p), np.nan)


def fit_rgev(
    sample: RLosSample,
    r: int,
    penalize: bool = True,
    init: GevParams | None = None,
    pen_alpha: float = 1.0,
    pen_lambda: float = 1.0,
) -> FitResult:
    """Fit the stationary rGEV model to the top r columns.

    Non-convergence is reported through `converged`, never raised; degenerate
    (zero-variance) data raise DegenerateDataError.
    """
    values = sample.values
    n = values.shape[0]
    if n < 5:
        raise ValueError(f"need at least 5 blocks to fit, got {n}.")
    if not 1 <= r <= values.shape[1]:
        raise ValueError(f"r must be in [1, {values.shape[1]}], got {r}.")
    x = values[:, :r]
    xs, c, d = _standardize(x)
    if init is None:
        init = initial_params(sample, r)

    def objective(theta):
        m, s, k = theta
        nll = -rgev_loglik_blocks(xs, m, math.exp(s), k).sum()
        if penalize:
            nll += _neg_log_penalty(k, pen_alpha, pen_lambda)
        return nll if nll < _BIG else _BIG

    x0 = np.array([(init.mu - c) / d, math.log(init.sigma / d), init.k])
    if objective(x0) >= _BIG:
        x0[2] = 0.0
    theta_std, f_best, iterations, nm_ok = _run_simplex(objective, x0, (0.1, 0.1, 0.05))
    if f_best > objective(x0):
        theta_std, f_best = x0, float(objective(x0))
    theta_std, f_best = _newton_polish(objective, theta_std, f_best)

    grad_max, stationary_ok = _stationarity_check(objective, theta_std, f_best, 2, penalize)
    if not stationary_ok and penalize and abs(theta_std[2]) <= 1e-3:
        theta_std, f_best = _refine_at_kink(objective, theta_std, f_best, 2, 0.0)
        grad_max, stationary_ok = _stationarity_check(objective, theta_std, f_best, 2, penalize)
    converged = bool(math.isfinite(f_best) and f_best < _BIG and stationary_ok)

    params = GevParams(
        mu=c + d * theta_std[0], sigma=d * math.exp(theta_std[1]), k=theta_std[2]
    )
    nll = f_best + n * r * math.log(d)

    def objective_orig(theta):
        mu, sigma, k = theta
        if sigma <= 0.0:
            return math.inf
        nll_o = -rgev_loglik_blocks(x, mu, sigma, k).sum()
        if penalize:
            nll_o += _neg_log_penalty(k, pen_alpha, pen_lambda)
        return nll_o

    try:
        score, info = score_and_info(objective_orig, np.array([params.mu, params.sigma, params.k]))
    except NumericalError:
        score, info = _nan_fallback(3)
        converged = False
    return FitResult(
        params=params,
        nll=float(nll),
        penalized=penalize,
        converged=converged,
        iterations=iterations,
        score=score,
        info=info,
        r=r,
        n_blocks=n,
        model="rgev",
        grad_max_std=grad_max,
        message="" if nm_ok else "simplex hit its iteration limit",
    )


def _ns_initial(x: np.ndarray, tc: np.ndarray) -> np.ndarray:
    """Starting values (mu_c, mu1, s0_c, s1, k) at centred time.

    Column 1 is chopped into time windows; the log of each window's sd is
    regressed on window time for the scale line, then the location line is a
    1/sigma(t)^2-weighted least-squares fit.  Windowing keeps the estimates
    sane when sigma(t) grows by orders of magnitude over the record.
    """
    n = x.shape[0]
    order = np.argsort(tc)
    col = x[order, 0]
    ts = tc[order]
    size = max(4, min(40, n // 5))
    n_win = max(2, n // size)
    t_w, m_w, s_w = [], [], []
    for chunk in np.array_split(np.arange(n), n_win):
        if chunk.size < 2:
            continue
        mean, sd = _column_moments(col[chunk])
        if sd > 0:
            t_w.append(float(ts[chunk].mean()))
            m_w.append(mean)
            s_w.append(sd * math.sqrt(6.0) / math.pi)
    if len(t_w) < 2:
        mu, sg = _gumbel_moment_params(x[:, 0])
        if sg <= 0:
            raise DegenerateDataError("column 1 has zero variance; cannot initialize.")
        return np.array([mu, 0.0, math.log(sg), 0.0, 0.01])
    t_w = np.asarray(t_w)
    log_s = np.log(np.asarray(s_w))
    s1, s0_c = np.polyfit(t_w, log_s, 1)
    with np.errstate(over="ignore"):
        sig_t = np.exp(s0_c + s1 * tc)
    if not np.all(np.isfinite(sig_t)) or np.any(sig_t <= 0.0):
        sig_t = np.full(n, math.exp(float(np.median(log_s))))
        s1, s0_c = 0.0, float(np.median(log_s))
    y = x[:, 0] - EULER_GAMMA * sig_t
    weights = 1.0 / np.maximum(sig_t, 1e-300) ** 2
    weights /= weights.max()
    z = np.column_stack([np.ones(n), tc])
    zw = z * weights[:, None]
    try:
        beta = np.linalg.solve(z.T @ zw, zw.T @ y)
    except np.linalg.LinAlgError:
        beta = np.array([float(np.average(y, weights=weights)), 0.0])
    if not np.all(np.isfinite(beta)):
        beta = np.array([float(np.average(y, weights=weights)), 0.0])
    return np.array([float(beta[0]), float(beta[1]), float(s0_c), float(s1), 0.01])


def fit_rgev11(
    sample: RLosSample,
    r: int,
    penalize: bool = True,
    fix_slopes: bool = False,
    pen_alpha: float = 1.0,
    pen_lambda: float = 1.0,
) -> FitResult:
    """Fit the rGEV11 model (linear location, log-linear scale, constant shape).

    Requires the sample to carry a time index.  With fix_slopes=True the
    slopes are pinned to zero, which reproduces the stationary fit.
    """
    t = np.asarray(sample.time_index(), dtype=float)
    if fix_slopes:
        res = fit_rgev(sample, r, penalize=penalize, pen_alpha=pen_alpha, pen_lambda=pen_lambda)
        p = res.params
        res.params = NsGevParams(
            mu0=p.mu, mu1=0.0, sigma0=math.log(p.sigma), sigma1=0.0, k=p.k
        )
        res.model = "rgev11"
        return res

    values = sample.values
    n = values.shape[0]
    if n < 5:
        raise ValueError(f"need at least 5 blocks to fit, got {n}.")
    if not 1 <= r <= values.shape[1]:
        raise ValueError(f"r must be in [1, {values.shape[1]}], got {r}.")
    x = values[:, :r]
    t_bar = float(t.mean())
    tc = t - t_bar
    theta_init = _ns_initial(x, tc)

    # Internal parameterization: the location line is anchored where the
    # initial sigma(t) is smallest (that is where it is best identified) and
    # the scale line at mean time; psi holds offsets in per-parameter units,
    # which keeps the simplex conditioned when sigma(t) spans decades.
    with np.errstate(over="ignore"):
        sig_init = np.exp(theta_init[2] + theta_init[3] * tc)
    if not np.all(np.isfinite(sig_init)):
        sig_init = np.full_like(tc, 1.0)
    i_star = int(np.argmin(sig_init))
    tc_star = float(tc[i_star])
    sig_min = max(float(sig_init[i_star]), 1e-12)
    t_span = float(np.max(np.abs(tc))) or 1.0
    loc_rate = max(abs(theta_init[3]), 1.0 / t_span)
    w = np.array([sig_min, sig_min * loc_rate, 0.25, 0.5 / t_span, 0.1])
    anchor = np.array(
        [theta_init[0] + theta_init[1] * tc_star, theta_init[1], theta_init[2], theta_init[3], theta_init[4]]
    )

    def theta_of(psi):
        return anchor + w * psi

    def objective(psi):
        mu_star, mu1, s0_c, s1, k = theta_of(psi)
        loc = mu_star + mu1 * (tc - tc_star)
        with np.errstate(over="ignore"):
            scale = np.exp(s0_c + s1 * tc)
        if not np.all(np.isfinite(scale)):
            return _BIG
        nll = -rgev_loglik_blocks(x, loc, scale, k).sum()
        if penalize:
            nll += _neg_log_penalty(k, pen_alpha, pen_lambda)
        return nll if nll < _BIG else _BIG

    psi0 = np.zeros(5)
    if objective(psi0) >= _BIG:
        anchor[4] = 0.0
    if objective(psi0) >= _BIG:
        anchor[1] = 0.0
        anchor[3] = 0.0
    psi_hat, f_best, iterations, nm_ok = _run_simplex(objective, psi0, np.full(5, 0.5))
    if f_best > objective(psi0):
        psi_hat, f_best = psi0, float(objective(psi0))
    psi_hat, f_best = _newton_polish(objective, psi_hat, f_best)

    grad_max, stationary_ok = _stationarity_check(
        objective, psi_hat, f_best, 4, penalize, k_value=theta_of(psi_hat)[4], k_step=w[4]
    )
    if not stationary_ok and penalize and abs(theta_of(psi_hat)[4]) <= 1e-3:
        psi_pin = (0.0 - anchor[4]) / w[4]
        psi_hat, f_best = _refine_at_kink(objective, psi_hat, f_best, 4, psi_pin)
        grad_max, stationary_ok = _stationarity_check(
            objective, psi_hat, f_best, 4, penalize, k_value=theta_of(psi_hat)[4], k_step=w[4]
        )
    converged = bool(math.isfinite(f_best) and f_best < _BIG and stationary_ok)

    mu_star, mu1, s0_c, s1, k = theta_of(psi_hat)
    params = NsGevParams(
        mu0=mu_star - mu1 * (tc_star + t_bar),
        mu1=mu1,
        sigma0=s0_c - s1 * t_bar,
        sigma1=s1,
        k=k,
    )
    nll = f_best

    def objective_orig(theta):
        mu0, mu1, s0, s1, kk = theta
        loc = mu0 + mu1 * t
        with np.errstate(over="ignore"):
            scale = np.exp(s0 + s1 * t)
        if not np.all(np.isfinite(scale)):
            return math.inf
        nll_o = -rgev_loglik_blocks(x, loc, scale, kk).sum()
        if penalize:
            nll_o += _neg_log_penalty(kk, pen_alpha, pen_lambda)
        return nll_o

    theta_orig = np.array([params.mu0, params.mu1, params.sigma0, params.sigma1, params.k])
    try:
        score, info = score_and_info(objective_orig, theta_orig)
    except NumericalError:
        score, info = _nan_fallback(5)
        converged = False
    return FitResult(
        params=params,
        nll=float(nll),
        penalized=penalize,
        converged=converged,
        iterations=iterations,
        score=score,
        info=info,
        r=r,
        n_blocks=n,
        model="rgev11",
        grad_max_std=grad_max,
        message="" if nm_ok else "simplex hit its iteration limit",
    )
