"""Scikit-learn style estimators wrapping the fitting and selection core.

Both classes follow the sklearn contract: constructor arguments are stored
verbatim, all work happens in fit(), fitted state carries a trailing
underscore, and get_params/set_params/clone compose with the usual
pipelines.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .distributions import NsGevParams, rgev_loglik_blocks
from .rlos import RLosSample, as_rlos_sample
from .selection import run_selection

__all__ = ["RGevMLE", "RSelector"]


def _check_matrix(X, time=None) -> RLosSample:
    if isinstance(X, RLosSample):
        return X
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"X must be a 2-d array of shape (n_blocks, n_orders), got {X.shape}.")
    return as_rlos_sample(X, time=time)


class RGevMLE(BaseEstimator):
    """Maximum (penalized) likelihood estimator for the r-largest GEV model.

    Parameters
    ----------
    r : int or None
        Number of order statistics used; None means all columns of X.
    nonstationary : bool
        Fit the rGEV11 model (linear location, log-linear scale in time);
        requires a time index (pass `t` to fit or an RLosSample with time).
    penalize : bool
        Apply the shape-parameter penalty to the likelihood.

    Attributes
    ----------
    params_ : GevParams or NsGevParams
    nll_ : float, minimized objective
    converged_ : bool
    result_ : FitResult with score/information diagnostics
    """

    def __init__(self, r=None, nonstationary=False, penalize=True):
        self.r = r
        self.nonstationary = nonstationary
        self.penalize = penalize

    def fit(self, X, y=None, t=None):
        from .fitting import fit_rgev, fit_rgev11

        sample = _check_matrix(X, time=t)
        if t is not None and sample.time is None:
            sample = RLosSample(sample.values, time=np.asarray(t, dtype=int))
        r = sample.n_orders if self.r is None else int(self.r)
        if self.nonstationary:
            result = fit_rgev11(sample, r, penalize=self.penalize)
        else:
            result = fit_rgev(sample, r, penalize=self.penalize)
        self.result_ = result
        self.params_ = result.params
        self.nll_ = result.nll
        self.converged_ = result.converged
        self.r_ = r
        self.n_features_in_ = sample.n_orders
        return self

    def score_samples(self, X, t=None):
        """Per-block log-likelihood of the top-r columns under the fitted model."""
        from sklearn.utils.validation import check_is_fitted

        check_is_fitted(self, "params_")
        sample = _check_matrix(X, time=t)
        values = sample.values[:, : self.r_]
        if isinstance(self.params_, NsGevParams):
            tt = sample.time_index()
            return rgev_loglik_blocks(
                values, self.params_.loc(tt), self.params_.scale(tt), self.params_.k
            )
        return rgev_loglik_blocks(values, self.params_.mu, self.params_.sigma, self.params_.k)

    def score(self, X, y=None, t=None):
        """Mean per-block log-likelihood."""
        return float(np.mean(self.score_samples(X, t=t)))


class RSelector(BaseEstimator, TransformerMixin):
    """Automatic selection of the number of order statistics r.

    fit(X) runs the chosen sequential goodness-of-fit test(s) and stores the
    selected r; transform(X) returns the matrix truncated to the selected
    columns, so the selector drops into sklearn pipelines.

    Parameters
    ----------
    method : str or sequence of str
        Any of "ccdf", "spacings", "ed", "score" (or "all").  With several
        methods, `r_` comes from the first one listed.
    alpha : float
        Significance level of the sequential tests.
    layer : str
        Which p-value sequence drives stopping: "raw", "forwardstop" or
        "strongstop".
    nonstationary : bool
        Use rGEV11 fits (the score method is then unavailable).
    rmax : int or None
        Largest order tested; None means all columns.
    penalize, n_boot, seed, n_jobs
        Passed through to the fits and the bootstrap score test.
    """

    def __init__(
        self,
        method="ccdf",
        alpha=0.05,
        layer="raw",
        nonstationary=False,
        rmax=None,
        penalize=True,
        n_boot=1000,
        seed=None,
        n_jobs=1,
    ):
        self.method = method
        self.alpha = alpha
        self.layer = layer
        self.nonstationary = nonstationary
        self.rmax = rmax
        self.penalize = penalize
        self.n_boot = n_boot
        self.seed = seed
        self.n_jobs = n_jobs

    def _methods(self) -> tuple[str, ...]:
        if isinstance(self.method, str):
            if self.method == "all":
                return ("spacings", "score", "ed", "ccdf")
            return (self.method,)
        return tuple(self.method)

    def fit(self, X, y=None, t=None):
        sample = _check_matrix(X, time=t)
        if t is not None and sample.time is None:
            sample = RLosSample(sample.values, time=np.asarray(t, dtype=int))
        methods = self._methods()
        self.reports_ = run_selection(
            sample,
            methods=methods,
            rmax=self.rmax,
            alpha=self.alpha,
            layer=self.layer,
            model="rgev11" if self.nonstationary else "stationary",
            penalize=self.penalize,
            n_boot=self.n_boot,
            seed=self.seed,
            n_jobs=self.n_jobs,
        )
        self.r_by_method_ = {m: rep.chosen_r for m, rep in self.reports_.items()}
        self.r_ = self.r_by_method_[methods[0]]
        self.n_features_in_ = sample.n_orders
        return self

    def transform(self, X):
        """Truncate X to the selected top-r columns."""
        from sklearn.utils.validation import check_is_fitted

        check_is_fitted(self, "r_")
        sample = _check_matrix(X)
        return sample.values[:, : self.r_]
