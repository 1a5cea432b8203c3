"""Monte Carlo experiment runner for the selection methods.

Reproduces the contaminated-sample simulation designs at configurable scale:
generate -> contaminate -> run each test sequence -> select r -> tally a
histogram of selected r per method.  Replicates are distributed over a
joblib worker pool; per-replicate seeds are spawned up front so results are
bit-identical for any worker count.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .distributions import GevParams, NsGevParams, WakebyParams
from .exceptions import DataValidationError, DegenerateDataError, NumericalError
from .rlos import RLosSample
from .sampling import contaminate, sample_rgev, sample_rgev11, sample_wakeby_rlos
from .selection import SELECTION_METHODS, run_selection

__all__ = ["ExperimentConfig", "SelectionHistogram", "run_experiment", "load_config"]

_POPULATIONS = ("rgev", "rgev11", "wakeby")


@dataclass(frozen=True)
class ExperimentConfig:
    """Design of one Monte Carlo experiment."""

    population: str
    params: GevParams | NsGevParams | WakebyParams
    n: int
    n_orders: int
    true_r: int
    mixing_p: float
    replicates: int
    seed: int
    tests: tuple[str, ...] = ("ccdf",)
    alpha: float = 0.05
    layer: str = "raw"
    penalize: bool = True
    rmax: int | None = None
    block_size: int = 100
    n_boot: int = 199
    n_jobs: int = 1

    def __post_init__(self):
        if self.population not in _POPULATIONS:
            raise DataValidationError(
                f"population must be one of {_POPULATIONS}, got {self.population!r}."
            )
        if not 1 <= self.true_r <= self.n_orders:
            raise DataValidationError(
                f"true_r must be in [1, {self.n_orders}], got {self.true_r}."
            )
        if not 0.0 <= self.mixing_p <= 1.0:
            raise DataValidationError(f"mixing_p must be in [0, 1], got {self.mixing_p}.")
        if self.replicates < 1:
            raise DataValidationError(f"replicates must be >= 1, got {self.replicates}.")
        unknown = set(self.tests) - set(SELECTION_METHODS)
        if unknown:
            raise DataValidationError(f"unknown test methods: {sorted(unknown)}.")
        if self.population == "rgev11" and "score" in self.tests:
            raise DataValidationError(
                "the score test is not available for the rgev11 population."
            )
        expected = {"rgev": GevParams, "rgev11": NsGevParams, "wakeby": WakebyParams}
        if not isinstance(self.params, expected[self.population]):
            raise DataValidationError(
                f"population {self.population!r} needs {expected[self.population].__name__} parameters."
            )


@dataclass
class SelectionHistogram:
    """Frequencies of the selected r for one method."""

    method: str
    population: str
    n: int
    counts: dict[int, int] = field(default_factory=dict)
    replicates: int = 0
    failures: int = 0

    @property
    def mode(self) -> int | None:
        if not self.counts:
            return None
        return max(sorted(self.counts), key=lambda r: self.counts[r])


def _generate(config: ExperimentConfig, seed) -> RLosSample:
    if config.population == "rgev":
        sample = sample_rgev(config.n, config.n_orders, config.params, seed=seed)
    elif config.population == "rgev11":
        sample = sample_rgev11(config.n, config.n_orders, config.params, seed=seed)
    else:
        sample = sample_wakeby_rlos(
            config.n, config.n_orders, config.params, block_size=config.block_size, seed=seed
        )
    if config.mixing_p < 1.0 and config.true_r + 1 <= config.n_orders:
        sample = contaminate(sample, config.true_r, config.mixing_p)
    return sample


def _replicate(config: ExperimentConfig, seed) -> dict[str, int | None]:
    data_seed, select_seed = seed.spawn(2)
    sample = _generate(config, data_seed)
    model = "rgev11" if config.population == "rgev11" else "stationary"
    out: dict[str, int | None] = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        try:
            reports = run_selection(
                sample,
                methods=config.tests,
                rmax=config.rmax,
                alpha=config.alpha,
                layer=config.layer,
                model=model,
                penalize=config.penalize,
                n_boot=config.n_boot,
                seed=select_seed,
            )
        except (DegenerateDataError, NumericalError):
            return {m: None for m in config.tests}
    for method, report in reports.items():
        out[method] = None if _selection_compromised(report) else report.chosen_r
    return out


def _selection_compromised(report) -> bool:
    """True when a skipped test could have changed the chosen r.

    Skips strictly after the first rejection cannot move the stopping point,
    so only NaN p-values at or before it (or anywhere, if nothing was
    rejected) invalidate a replicate.
    """
    layer_values = {
        "raw": report.pvalues,
        "forwardstop": report.forwardstop,
        "strongstop": report.strongstop,
    }[report.layer]
    nan_idx = [i for i, p in enumerate(report.pvalues) if np.isnan(p)]
    if not nan_idx:
        return False
    hits = [i for i, v in enumerate(layer_values) if not np.isnan(v) and v < report.alpha]
    if not hits:
        return True
    return any(i <= hits[0] for i in nan_idx)


def run_experiment(config: ExperimentConfig) -> dict[str, SelectionHistogram]:
    """Run all replicates and tally selected r per method.

    Replicates with a non-convergent fit anywhere in a method's sequence are
    tallied as failures for that method, not binned.
    """
    seeds = np.random.SeedSequence(config.seed).spawn(config.replicates)
    results = Parallel(n_jobs=config.n_jobs)(
        delayed(_replicate)(config, seed) for seed in seeds
    )
    histograms = {
        m: SelectionHistogram(
            method=m, population=config.population, n=config.n, replicates=config.replicates
        )
        for m in config.tests
    }
    for rep in results:
        for method, chosen in rep.items():
            h = histograms[method]
            if chosen is None:
                h.failures += 1
            else:
                h.counts[chosen] = h.counts.get(chosen, 0) + 1
    return histograms


_REQUIRED_KEYS = ("population", "n", "R", "true_r", "mixing_p", "replicates", "seed")

_PARAM_KEYS = {
    "rgev": ("mu", "sigma", "k"),
    "rgev11": ("mu0", "mu1", "sigma0", "sigma1", "k"),
    "wakeby": ("wakeby_xi", "wakeby_alpha", "wakeby_beta", "wakeby_gamma", "wakeby_delta"),
}


def _parse_kv(path) -> dict[str, str]:
    table: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataValidationError(
                    f"{path}: line {lineno}: expected 'key = value', got {raw.rstrip()!r}."
                )
            key, value = line.split("=", 1)
            table[key.strip()] = value.strip()
    return table


def load_config(path) -> ExperimentConfig:
    """Parse a flat key = value experiment file.

    Required keys: population, n, R, true_r, mixing_p, replicates, seed, and
    the population's parameter keys (mu/sigma/k, mu0/mu1/sigma0/sigma1/k, or
    wakeby_*).  Optional: tests (comma list), alpha, layer, penalize, rmax,
    block_size, n_boot, n_jobs.
    """
    table = _parse_kv(path)
    for key in _REQUIRED_KEYS:
        if key not in table:
            raise DataValidationError(f"{path}: missing required key {key!r}.")
    population = table["population"]
    if population not in _PARAM_KEYS:
        raise DataValidationError(
            f"{path}: population must be one of {_POPULATIONS}, got {population!r}."
        )
    for key in _PARAM_KEYS[population]:
        if key not in table:
            raise DataValidationError(f"{path}: missing required key {key!r}.")

    def num(key, cast=float):
        try:
            return cast(float(table[key]))
        except ValueError:
            raise DataValidationError(f"{path}: key {key!r} is not numeric.") from None

    if population == "rgev":
        params = GevParams(mu=num("mu"), sigma=num("sigma"), k=num("k"))
    elif population == "rgev11":
        params = NsGevParams(
            mu0=num("mu0"), mu1=num("mu1"), sigma0=num("sigma0"),
            sigma1=num("sigma1"), k=num("k"),
        )
    else:
        params = WakebyParams(
            xi=num("wakeby_xi"), alpha=num("wakeby_alpha"), beta=num("wakeby_beta"),
            gamma=num("wakeby_gamma"), delta=num("wakeby_delta"),
        )
    tests = tuple(
        t.strip() for t in table.get("tests", "ccdf").split(",") if t.strip()
    )
    rmax = int(float(table["rmax"])) if "rmax" in table else None
    return ExperimentConfig(
        population=population,
        params=params,
        n=num("n", int),
        n_orders=num("R", int),
        true_r=num("true_r", int),
        mixing_p=num("mixing_p"),
        replicates=num("replicates", int),
        seed=num("seed", int),
        tests=tests,
        alpha=float(table.get("alpha", 0.05)),
        layer=table.get("layer", "raw"),
        penalize=table.get("penalize", "true").lower() in ("1", "true", "yes", "on"),
        rmax=rmax,
        block_size=int(float(table.get("block_size", 100))),
        n_boot=int(float(table.get("n_boot", 199))),
        n_jobs=int(float(table.get("n_jobs", 1))),
    )


def config_as_dict(config: ExperimentConfig) -> dict:
    """JSON-ready echo of a config (for run manifests)."""
    d = {
        "population": config.population,
        "n": config.n,
        "R": config.n_orders,
        "true_r": config.true_r,
        "mixing_p": config.mixing_p,
        "replicates": config.replicates,
        "seed": config.seed,
        "tests": list(config.tests),
        "alpha": config.alpha,
        "layer": config.layer,
        "penalize": config.penalize,
        "rmax": config.rmax,
        "block_size": config.block_size,
        "n_boot": config.n_boot,
        "n_jobs": config.n_jobs,
        "params": vars(config.params).copy(),
    }
    return json.loads(json.dumps(d))
