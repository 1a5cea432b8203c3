"""Sequential tests for choosing the number of order statistics r.

Four test families are provided: spacings (exponentiality of scaled gaps),
CCDF (uniformity of the conditional distribution transform), entropy
difference (normal limit of per-block log-likelihood gains) and a score
statistic calibrated by parametric bootstrap.  Each step r fits the model
under the hypothesis that the top-r columns follow the (nonstationary) rGEV
and turns the resulting values into a Cramer-von Mises or normal p-value;
the selection layer walks the p-values in increasing r.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from .distributions import (
    GUMBEL_EPS,
    GevParams,
    NsGevParams,
    digamma,
    rgev_loglik_blocks,
)
from .exceptions import DegenerateDataError, NumericalError
from .fitting import FitResult, fit_rgev, fit_rgev11
from .gof import cvm_pvalue, cvm_statistic, exp1_cdf, uniform_cdf
from .rlos import RLosSample
from .sampling import sample_rgev

logger = logging.getLogger(__name__)

__all__ = [
    "TestResult",
    "SelectionReport",
    "spacings_values",
    "ccdf_values",
    "ed_values",
    "gumbel_transform",
    "spacings_test",
    "ccdf_test",
    "ed_test",
    "score_test_pb",
    "adjust_pvalues",
    "select_r",
    "run_selection",
    "SELECTION_METHODS",
]

SELECTION_METHODS = ("spacings", "score", "ed", "ccdf")

_STANDARD_GUMBEL = GevParams(mu=0.0, sigma=1.0, k=0.0)


@dataclass(frozen=True)
class TestResult:
    """One goodness-of-fit test at one order r."""

    method: str
    r: int
    statistic: float
    pvalue: float
    fit: FitResult | None = None
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class SelectionReport:
    """Per-method outcome of the sequential selection."""

    method: str
    results: tuple[TestResult, ...]
    pvalues: tuple[float, ...]
    forwardstop: tuple[float, ...]
    strongstop: tuple[float, ...]
    alpha: float
    layer: str
    chosen_r: int
    rule: str
    diagnostics: tuple[TestResult, ...] = ()

    @property
    def rs(self) -> tuple[int, ...]:
        return tuple(t.r for t in self.results)


def _loc_scale(params, sample: RLosSample):
    if isinstance(params, NsGevParams):
        t = sample.time_index()
        return params.loc(t), params.scale(t)
    return params.mu, params.sigma


def spacings_values(sample: RLosSample, r: int, params) -> np.ndarray:
    """r * D_r per block: unit-exponential under the model.

    D_r compares orders r and r+1 through the transformed gap
    (1/k) log(w(x^(r+1)) / w(x^(r))); the k = 0 limit is (x^(r) - x^(r+1)) / sigma.
    Support violations yield +inf sentinels in the returned array.
    """
    R = sample.n_orders
    if not 1 <= r <= R - 1:
        raise ValueError(f"spacings need columns r and r+1; r must be in [1, {R - 1}], got {r}.")
    x_r = sample.values[:, r - 1]
    x_r1 = sample.values[:, r]
    loc, scale = _loc_scale(params, sample)
    k = params.k
    if abs(k) < GUMBEL_EPS:
        d = (x_r - x_r1) / scale
    else:
        kz_r = k * (x_r - loc) / scale
        kz_r1 = k * (x_r1 - loc) / scale
        bad = (kz_r >= 1.0) | (kz_r1 >= 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            d = (np.log1p(np.where(bad, 0.0, -kz_r1)) - np.log1p(np.where(bad, 0.0, -kz_r))) / k
        d = np.where(bad, np.inf, d)
    return r * np.asarray(d, dtype=float)


def ccdf_values(sample: RLosSample, r: int, params) -> np.ndarray:
    """Conditional CDF transform U_r = F(x^(r)) / F(x^(r-1)) per block.

    F(x^(0)) = 1, so r = 1 reduces to the marginal GEV probability of the
    block maximum.  Values are uniform(0, 1) and independent across r under
    the model.  Computed in log space as exp(E_{r-1} - E_r) with
    E = w^(1/k) (E = exp(-z) for k = 0), which cannot produce 0/0; blocks
    where E is not finite come back as nan sentinels.
    """
    R = sample.n_orders
    if not 1 <= r <= R:
        raise ValueError(f"r must be in [1, {R}], got {r}.")
    loc, scale = _loc_scale(params, sample)
    k = params.k

    def exponent(col: np.ndarray) -> np.ndarray:
        z = (col - loc) / scale
        if abs(k) < GUMBEL_EPS:
            with np.errstate(over="ignore"):
                return np.exp(-z)
        kz = k * np.asarray(z)
        with np.errstate(divide="ignore", over="ignore"):
            lw = np.log1p(-kz, out=np.zeros_like(kz), where=kz < 1.0)
            inside = np.exp(lw / k)
        # past the support edge: CDF is 1 above a k>0 upper endpoint (E = 0)
        # and 0 below a k<0 lower endpoint (E = +inf)
        return np.where(kz < 1.0, inside, 0.0 if k > 0 else np.inf)

    e_r = exponent(sample.values[:, r - 1])
    e_prev = exponent(sample.values[:, r - 2]) if r >= 2 else np.zeros(sample.n_blocks)
    with np.errstate(invalid="ignore"):
        u = np.exp(e_prev - e_r)
    u = np.where(np.isfinite(e_r) & np.isfinite(e_prev), u, np.nan)
    return np.asarray(u, dtype=float)


def ed_values(sample: RLosSample, r: int, params) -> np.ndarray:
    """Per-block log-likelihood gain of the top-r over the top-(r-1) model."""
    if r < 2:
        raise ValueError(f"entropy differences need r >= 2, got {r}.")
    if r > sample.n_orders:
        raise ValueError(f"r must be <= {sample.n_orders}, got {r}.")
    loc, scale = _loc_scale(params, sample)
    ll_r = rgev_loglik_blocks(sample.values[:, :r], loc, scale, params.k)
    ll_r1 = rgev_loglik_blocks(sample.values[:, : r - 1], loc, scale, params.k)
    with np.errstate(invalid="ignore"):
        y = ll_r - ll_r1
    return np.asarray(y, dtype=float)


def gumbel_transform(sample: RLosSample, params: NsGevParams) -> RLosSample:
    """Map an rGEV11 sample onto the stationary standard-Gumbel scale.

    Y = (-1/k) log{1 - k (X - mu(t)) / sigma(t)} (or (X - mu(t)) / sigma(t)
    for k = 0); the transform is strictly increasing, so row ordering is
    preserved.  A support violation raises, naming the offending block and
    column.
    """
    t = sample.time_index()
    loc = np.asarray(params.loc(t), dtype=float)[:, None]
    scale = np.asarray(params.scale(t), dtype=float)[:, None]
    z = (sample.values - loc) / scale
    k = params.k
    if abs(k) < GUMBEL_EPS:
        y = z
    else:
        kz = k * z
        if np.any(kz >= 1.0):
            i, j = np.argwhere(kz >= 1.0)[0]
            raise ValueError(
                f"support violated at block {i + 1}, order {j + 1}: "
                f"1 - k (x - mu(t)) / sigma(t) = {1.0 - kz[i, j]:g} <= 0."
            )
        y = -np.log1p(-kz) / k
    return RLosSample(y, time=sample.time, units=sample.units)


def _skipped(method: str, r: int, fit: FitResult | None, reason: str) -> TestResult:
    return TestResult(
        method=method, r=r, statistic=math.nan, pvalue=math.nan, fit=fit,
        flags=(f"skipped: {reason}",),
    )


def _sentinel_reject(method: str, r: int, fit: FitResult, reason: str) -> TestResult:
    logger.warning("%s test at r=%d: %s; p-value set to 0.", method, r, reason)
    return TestResult(
        method=method, r=r, statistic=math.inf, pvalue=0.0, fit=fit,
        flags=(f"support violation: {reason}",),
    )


def _fit_h0(sample: RLosSample, r: int, model: str, penalize: bool) -> FitResult:
    if model == "rgev11":
        return fit_rgev11(sample, r, penalize=penalize)
    return fit_rgev(sample, r, penalize=penalize)


def _check_model(model: str) -> None:
    if model not in ("stationary", "rgev11"):
        raise ValueError(f"model must be 'stationary' or 'rgev11', got {model!r}.")


def spacings_test(
    sample: RLosSample, r: int, model: str = "stationary",
    penalize: bool = True, fit: FitResult | None = None,
) -> TestResult:
    """Exponentiality test of the scaled spacing below order r.

    Fits the top-r model, computes (r-1) * D_{r-1} from columns r-1 and r,
    and applies the Cramer-von Mises test against the Exp(1) CDF.
    """
    _check_model(model)
    if r < 2:
        raise ValueError(f"spacings test starts at r = 2, got {r}.")
    if sample.n_blocks < 5:
        return _skipped("spacings", r, None, "insufficient data (fewer than 5 blocks)")
    if fit is None:
        fit = _fit_h0(sample, r, model, penalize)
    if not fit.converged:
        return _skipped("spacings", r, fit, "fit did not converge")
    vals = spacings_values(sample, r - 1, fit.params)
    if not np.all(np.isfinite(vals)):
        return _sentinel_reject("spacings", r, fit, "fitted support excludes some blocks")
    res = cvm_statistic(vals, exp1_cdf)
    return TestResult(
        method="spacings", r=r, statistic=res.statistic,
        pvalue=cvm_pvalue(res.statistic, res.n), fit=fit,
    )


def ccdf_test(
    sample: RLosSample, r: int, model: str = "stationary",
    penalize: bool = True, fit: FitResult | None = None,
) -> TestResult:
    """Uniformity test of the conditional CDF transform at order r."""
    _check_model(model)
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}.")
    if sample.n_blocks < 5:
        return _skipped("ccdf", r, None, "insufficient data (fewer than 5 blocks)")
    if fit is None:
        fit = _fit_h0(sample, r, model, penalize)
    if not fit.converged:
        return _skipped("ccdf", r, fit, "fit did not converge")
    vals = ccdf_values(sample, r, fit.params)
    if not np.all(np.isfinite(vals)):
        return _sentinel_reject("ccdf", r, fit, "conditional CDF undefined for some blocks")
    res = cvm_statistic(vals, uniform_cdf)
    return TestResult(
        method="ccdf", r=r, statistic=res.statistic,
        pvalue=cvm_pvalue(res.statistic, res.n), fit=fit,
    )


def _two_sided_normal_p(t_stat: float) -> float:
    return float(math.erfc(abs(t_stat) / math.sqrt(2.0)))


def ed_test(
    sample: RLosSample, r: int, model: str = "stationary",
    penalize: bool = True, fit: FitResult | None = None,
) -> TestResult:
    """Entropy-difference test: normal limit of mean log-likelihood gain.

    For the stationary model the statistic is sqrt(n) (Ybar - eta_r) / S_Y
    with eta_r = -ln(sigma) - 1 + (1 - k) psi(r) at the fitted parameters.
    For rgev11 the sample is first mapped to the standard Gumbel scale with
    the fitted parameter curves, after which the reference parameters are
    known (mu = 0, sigma = 1, k = 0) and no second fit is needed.
    """
    _check_model(model)
    if r < 2:
        raise ValueError(f"entropy-difference test starts at r = 2, got {r}.")
    n = sample.n_blocks
    if n < 5:
        return _skipped("ed", r, None, "insufficient data (fewer than 5 blocks)")
    if n < 50:
        warnings.warn(
            f"entropy-difference test with n = {n} blocks; the normal "
            "approximation is recommended for n >= 50.",
            UserWarning,
            stacklevel=2,
        )
    if fit is None:
        fit = _fit_h0(sample, r, model, penalize)
    if not fit.converged:
        return _skipped("ed", r, fit, "fit did not converge")
    if model == "rgev11":
        try:
            transformed = gumbel_transform(sample.top(r), fit.params)
        except ValueError as exc:
            return _sentinel_reject("ed", r, fit, str(exc))
        y = ed_values(transformed, r, _STANDARD_GUMBEL)
        sigma_hat, k_hat = 1.0, 0.0
    else:
        y = ed_values(sample, r, fit.params)
        sigma_hat, k_hat = fit.params.sigma, fit.params.k
    if not np.all(np.isfinite(y)):
        return _sentinel_reject("ed", r, fit, "log-likelihood undefined for some blocks")
    eta_r = -math.log(sigma_hat) - 1.0 + (1.0 - k_hat) * digamma(r)
    s_y = float(y.std(ddof=1))
    if s_y <= 1e-12 * max(1.0, abs(float(y.mean()))):
        raise DegenerateDataError("entropy differences have (numerically) zero variance.")
    t_stat = math.sqrt(n) * (float(y.mean()) - eta_r) / s_y
    return TestResult(
        method="ed", r=r, statistic=float(t_stat),
        pvalue=_two_sided_normal_p(t_stat), fit=fit,
    )


def _boot_pvalue(count_ge: int, n_boot: int) -> float:
    """(1 + #{V* >= V}) / (L + 1): never exactly zero."""
    return (1.0 + count_ge) / (n_boot + 1.0)


def _as_seedseq(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _score_statistic(fit: FitResult) -> tuple[float, tuple[str, ...]]:
    score, info = fit.score, fit.info
    n = fit.n_blocks
    flags: tuple[str, ...] = ()
    if not (np.all(np.isfinite(score)) and np.all(np.isfinite(info))):
        raise NumericalError("score or information matrix is not finite.")
    try:
        sol = np.linalg.solve(info, score)
        v = float(score @ sol) / n
        if not math.isfinite(v) or v < 0.0:
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        ridge = 1e-8 * float(np.trace(info)) / info.shape[0]
        try:
            sol = np.linalg.solve(info + ridge * np.eye(info.shape[0]), score)
        except np.linalg.LinAlgError:
            raise NumericalError("information matrix is singular even after ridging.") from None
        v = float(score @ sol) / n
        flags = ("information matrix ridged",)
        if not math.isfinite(v):
            raise NumericalError("score statistic is not finite.")
    return abs(v), flags


def _score_boot_worker(seed, params: GevParams, n: int, r: int, penalize: bool):
    boot = sample_rgev(n, r, params, seed=seed)
    try:
        fit = fit_rgev(boot, r, penalize=penalize)
    except (DegenerateDataError, ValueError):
        return None
    if not fit.converged:
        return None
    try:
        v, _ = _score_statistic(fit)
    except NumericalError:
        return None
    return v


def score_test_pb(
    sample: RLosSample, r: int, n_boot: int = 199, seed=None,
    model: str = "stationary", penalize: bool = True,
    fit: FitResult | None = None, n_jobs: int = 1,
) -> TestResult:
    """Score statistic V_n = S' I^{-1} S / n calibrated by parametric bootstrap.

    Generates n_boot samples from the fitted top-r model, refits each and
    compares the bootstrap statistics with the observed one; replicates whose
    refit fails are dropped (an error is raised if more than 10% fail).  Only
    the stationary model is supported.
    """
    if model != "stationary":
        raise ValueError("the parametric-bootstrap score test supports the stationary model only.")
    if n_boot < 99:
        raise ValueError(f"n_boot must be at least 99, got {n_boot}.")
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}.")
    if sample.n_blocks < 5:
        return _skipped("score", r, None, "insufficient data (fewer than 5 blocks)")
    if fit is None:
        fit = _fit_h0(sample, r, "stationary", penalize)
    if not fit.converged:
        return _skipped("score", r, fit, "fit did not converge")
    try:
        v_obs, flags = _score_statistic(fit)
    except NumericalError as exc:
        return _skipped("score", r, fit, str(exc))
    children = _as_seedseq(seed).spawn(n_boot)
    results = Parallel(n_jobs=n_jobs)(
        delayed(_score_boot_worker)(child, fit.params, sample.n_blocks, r, penalize)
        for child in children
    )
    v_boot = [v for v in results if v is not None]
    failures = n_boot - len(v_boot)
    if failures > 0.1 * n_boot:
        raise NumericalError(
            f"{failures} of {n_boot} bootstrap refits failed for the score test at r={r}."
        )
    if failures:
        flags = flags + (f"{failures} bootstrap refits dropped",)
    count_ge = int(np.sum(np.asarray(v_boot) >= v_obs))
    pvalue = _boot_pvalue(count_ge, len(v_boot))
    return TestResult(
        method="score", r=r, statistic=v_obs, pvalue=pvalue, fit=fit, flags=flags,
    )


def adjust_pvalues(pvalues, method: str) -> np.ndarray:
    """Sequential-testing adjustment of ordered raw p-values.

    forwardstop: FS_k = -(1/k) sum_{i<=k} ln(1 - p_i)
    strongstop:  SS_k = exp( sum_{j>=k} ln(p_j)/j ) * m / k
    Outputs are clamped to [0, 1] (a raw p of 1 drives ForwardStop to its
    +inf sentinel before clamping).
    """
    p = np.asarray(pvalues, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("pvalues must be a non-empty 1-d sequence.")
    if np.any((p < 0.0) | (p > 1.0)):
        raise ValueError("pvalues must lie in [0, 1].")
    m = p.size
    ks = np.arange(1, m + 1)
    if method == "forwardstop":
        with np.errstate(divide="ignore"):
            terms = -np.log1p(-p)
        out = np.cumsum(terms) / ks
    elif method == "strongstop":
        with np.errstate(divide="ignore"):
            logs = np.log(p) / ks
        rev_tail = np.cumsum(logs[::-1])[::-1]
        with np.errstate(over="ignore"):
            out = np.exp(rev_tail) * m / ks
    else:
        raise ValueError(f"method must be 'forwardstop' or 'strongstop', got {method!r}.")
    return np.clip(out, 0.0, 1.0)


def select_r(results, alpha: float = 0.05, layer: str = "raw") -> SelectionReport:
    """Walk ordered test results and pick r.

    The chosen r is one below the first rejected order (floored at 1); with
    no rejection it is the largest tested order.  `layer` selects which
    p-value sequence is compared with alpha: raw, forwardstop or strongstop.
    """
    results = tuple(results)
    if not results:
        raise ValueError("results must be non-empty.")
    if layer not in ("raw", "forwardstop", "strongstop"):
        raise ValueError(f"layer must be raw, forwardstop or strongstop, got {layer!r}.")
    rs = [t.r for t in results]
    if any(b - a != 1 for a, b in zip(rs, rs[1:])):
        raise ValueError(f"results must cover consecutive increasing r, got {rs}.")
    raw = np.array([t.pvalue for t in results], dtype=float)
    safe = np.where(np.isfinite(raw), raw, 1.0)
    fs = adjust_pvalues(safe, "forwardstop")
    ss = adjust_pvalues(safe, "strongstop")
    layer_values = {"raw": raw, "forwardstop": fs, "strongstop": ss}[layer]
    chosen = rs[-1]
    with np.errstate(invalid="ignore"):
        hits = np.nonzero(layer_values < alpha)[0]
    if hits.size:
        chosen = max(rs[int(hits[0])] - 1, 1)
    return SelectionReport(
        method=results[0].method,
        results=results,
        pvalues=tuple(float(v) for v in raw),
        forwardstop=tuple(float(v) for v in fs),
        strongstop=tuple(float(v) for v in ss),
        alpha=alpha,
        layer=layer,
        chosen_r=int(chosen),
        rule=f"first {layer} p-value below alpha rejects; chosen r is one less",
    )


def run_selection(
    sample: RLosSample,
    methods=("ccdf",),
    rmax: int | None = None,
    alpha: float = 0.05,
    layer: str = "raw",
    model: str = "stationary",
    penalize: bool = True,
    n_boot: int = 1000,
    seed=None,
    n_jobs: int = 1,
) -> dict[str, SelectionReport]:
    """Run the sequential selection for one or more methods with shared fits.

    The H0 fit at each r is computed once and reused by every method.  The
    CCDF test at r = 1 (marginal GEV fit of the block maxima) is reported as
    a diagnostic but not used for stopping; the score test starts at r = 1,
    the others at r = 2.
    """
    _check_model(model)
    methods = tuple(methods)
    unknown = set(methods) - set(SELECTION_METHODS)
    if unknown:
        raise ValueError(f"unknown methods: {sorted(unknown)}.")
    if model == "rgev11" and "score" in methods:
        raise ValueError("the score test is not available for the rgev11 model.")
    R = sample.n_orders
    rmax = R if rmax is None else int(rmax)
    if not 2 <= rmax <= R:
        raise ValueError(f"rmax must be in [2, {R}], got {rmax}.")

    fits: dict[int, FitResult] = {}

    def fit_for(r: int) -> FitResult:
        if r not in fits:
            fits[r] = _fit_h0(sample, r, model, penalize)
        return fits[r]

    score_seed = _as_seedseq(seed)
    reports: dict[str, SelectionReport] = {}
    for method in methods:
        if method == "spacings":
            results = [spacings_test(sample, r, model, penalize, fit_for(r)) for r in range(2, rmax + 1)]
            diagnostics: tuple[TestResult, ...] = ()
        elif method == "ccdf":
            results = [ccdf_test(sample, r, model, penalize, fit_for(r)) for r in range(2, rmax + 1)]
            diagnostics = (ccdf_test(sample, 1, model, penalize, fit_for(1)),)
        elif method == "ed":
            results = [ed_test(sample, r, model, penalize, fit_for(r)) for r in range(2, rmax + 1)]
            diagnostics = ()
        else:
            results = [
                score_test_pb(
                    sample, r, n_boot=n_boot, seed=child, model=model,
                    penalize=penalize, fit=fit_for(r), n_jobs=n_jobs,
                )
                for r, child in zip(range(1, rmax + 1), score_seed.spawn(rmax))
            ]
            diagnostics = ()
        report = select_r(results, alpha=alpha, layer=layer)
        reports[method] = SelectionReport(
            method=report.method,
            results=report.results,
            pvalues=report.pvalues,
            forwardstop=report.forwardstop,
            strongstop=report.strongstop,
            alpha=report.alpha,
            layer=report.layer,
            chosen_r=report.chosen_r,
            rule=report.rule,
            diagnostics=diagnostics,
        )
    return reports
