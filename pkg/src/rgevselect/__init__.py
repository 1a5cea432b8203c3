"""rgevselect: r-largest order statistics GEV modelling with automated selection of r.

Fits stationary (rGEV) and nonstationary (rGEV11) models for the r largest
order statistics per block and picks r through sequences of goodness-of-fit
tests (spacings, parametric-bootstrap score, entropy difference, conditional
CDF), with sequential p-value adjustments and a Monte Carlo experiment
harness.
"""
from .distributions import (
    GevParams,
    NsGevParams,
    WakebyParams,
    digamma,
    gev_cdf,
    gev_quantile,
    rgev_negloglik,
    wakeby_quantile,
)
from .estimators import RGevMLE, RSelector
from .exceptions import DataValidationError, DegenerateDataError, NumericalError
from .fitting import FitResult, coles_dixon_penalty, fit_rgev, fit_rgev11, initial_params, score_and_info
from .gof import CvmResult, cvm_pvalue, cvm_statistic, cvm_test, mann_kendall
from .harness import ExperimentConfig, SelectionHistogram, load_config, run_experiment
from .rlos import RLosSample, as_rlos_sample, load_rlos_csv
from .sampling import contaminate, sample_rgev, sample_rgev11, sample_wakeby_rlos
from .selection import (
    SelectionReport,
    TestResult,
    adjust_pvalues,
    ccdf_test,
    ccdf_values,
    ed_test,
    ed_values,
    gumbel_transform,
    run_selection,
    score_test_pb,
    select_r,
    spacings_test,
    spacings_values,
)

__version__ = "0.1.0"

__all__ = [
    "GevParams",
    "NsGevParams",
    "WakebyParams",
    "digamma",
    "gev_cdf",
    "gev_quantile",
    "rgev_negloglik",
    "wakeby_quantile",
    "RGevMLE",
    "RSelector",
    "DataValidationError",
    "DegenerateDataError",
    "NumericalError",
    "FitResult",
    "coles_dixon_penalty",
    "fit_rgev",
    "fit_rgev11",
    "initial_params",
    "score_and_info",
    "CvmResult",
    "cvm_pvalue",
    "cvm_statistic",
    "cvm_test",
    "mann_kendall",
    "ExperimentConfig",
    "SelectionHistogram",
    "load_config",
    "run_experiment",
    "RLosSample",
    "as_rlos_sample",
    "load_rlos_csv",
    "contaminate",
    "sample_rgev",
    "sample_rgev11",
    "sample_wakeby_rlos",
    "SelectionReport",
    "TestResult",
    "adjust_pvalues",
    "ccdf_test",
    "ccdf_values",
    "ed_test",
    "ed_values",
    "gumbel_transform",
    "run_selection",
    "score_test_pb",
    "select_r",
    "spacings_test",
    "spacings_values",
    "__version__",
]
