"""Command-line interface: fit | select | ppdata | experiment.

Exit codes: 0 success, 1 data error, 2 numerical failure.  All file outputs
are tab-separated with a comment-prefixed header echoing the invocation and
seed.
"""
from __future__ import annotations

import json
import math
import sys
import warnings
from pathlib import Path

import click
import numpy as np

from . import __version__
from .distributions import NsGevParams
from .exceptions import DataValidationError, NumericalError
from .fitting import fit_rgev, fit_rgev11
from .gof import exp1_cdf, mann_kendall
from .harness import config_as_dict, load_config, run_experiment
from .rlos import load_rlos_csv
from .selection import (
    SelectionReport,
    TestResult,
    ccdf_values,
    run_selection,
    spacings_values,
)

_EXIT_DATA = 1
_EXIT_NUMERIC = 2


def _invocation() -> str:
    return " ".join(sys.argv)


def _echo_header(fh, seed=None):
    fh.write(f"# invocation: {_invocation()}\n")
    fh.write(f"# rgevselect: {__version__}\n")
    if seed is not None:
        fh.write(f"# seed: {seed}\n")


@click.group()
@click.version_option(__version__)
def main():
    """Fit r-largest GEV models and select r via sequential tests."""


def _load(file, ns: bool):
    sample, years = load_rlos_csv(file)
    if ns and np.any(np.diff(years) <= 0):
        raise DataValidationError("nonstationary model needs strictly increasing years.")
    return sample, years


def _params_lines(params) -> list[str]:
    if isinstance(params, NsGevParams):
        return [
            f"mu0     {params.mu0:.6g}",
            f"mu1     {params.mu1:.6g}",
            f"sigma0  {params.sigma0:.6g}",
            f"sigma1  {params.sigma1:.6g}",
            f"k       {params.k:.6g}",
        ]
    return [
        f"mu      {params.mu:.6g}",
        f"sigma   {params.sigma:.6g}",
        f"k       {params.k:.6g}",
    ]


@main.command("fit")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("-r", "--r", "r", type=int, required=True, help="Number of order statistics.")
@click.option("--ns", is_flag=True, help="Fit the nonstationary rGEV11 model.")
@click.option("--penalize/--no-penalize", default=True, show_default=True,
              help="Penalized likelihood for the shape parameter.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the fit as JSON to this path.")
def cmd_fit(file, r, ns, penalize, out):
    """Fit the model with the top r columns of FILE."""
    sample, _ = _load(file, ns)
    if r > sample.n_orders:
        raise DataValidationError(
            f"r = {r} exceeds the {sample.n_orders} order-statistic columns in {file}."
        )
    result = fit_rgev11(sample, r, penalize=penalize) if ns else fit_rgev(sample, r, penalize=penalize)
    click.echo(f"# invocation: {_invocation()}")
    click.echo(f"model: {result.model}   r: {r}   blocks: {result.n_blocks}")
    for line in _params_lines(result.params):
        click.echo(line)
    click.echo(f"nll     {result.nll:.6f}" + ("   (penalized)" if result.penalized else ""))
    click.echo(f"converged: {'yes' if result.converged else 'no'}   iterations: {result.iterations}")
    if out:
        payload = {
            "model": result.model,
            "r": r,
            "params": vars(result.params).copy(),
            "nll": result.nll,
            "penalized": result.penalized,
            "converged": result.converged,
            "iterations": result.iterations,
            "score": [float(v) for v in result.score],
            "info": [[float(v) for v in row] for row in result.info],
        }
        Path(out).write_text(json.dumps(payload, indent=2) + "\n")
        click.echo(f"wrote {out}")
    if not result.converged:
        raise NumericalError(f"fit did not converge (r = {r}).")


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "nan"
    return f"{v:.6g}"


def write_selection_report(path, reports: dict[str, SelectionReport], seed=None) -> None:
    """Serialize selection reports as a tab-separated table.

    Rows carry a `stopping` flag (0 for diagnostic rows such as the CCDF
    r = 1 entry) so the chosen r can be re-derived from the file.
    """
    with open(path, "w") as fh:
        _echo_header(fh, seed=seed)
        first = next(iter(reports.values()))
        fh.write(f"# alpha: {first.alpha}\n")
        fh.write(f"# layer: {first.layer}\n")
        for method, rep in reports.items():
            fh.write(f"# chosen_r[{method}]: {rep.chosen_r}\n")
        fh.write("method\tr\tstatistic\tpvalue\tforwardstop\tstrongstop\tstopping\n")
        for method, rep in reports.items():
            for diag in rep.diagnostics:
                fh.write(
                    f"{method}\t{diag.r}\t{_fmt(diag.statistic)}\t{_fmt(diag.pvalue)}\tnan\tnan\t0\n"
                )
            for res, fs, ss in zip(rep.results, rep.forwardstop, rep.strongstop):
                fh.write(
                    f"{method}\t{res.r}\t{_fmt(res.statistic)}\t{_fmt(res.pvalue)}"
                    f"\t{_fmt(fs)}\t{_fmt(ss)}\t1\n"
                )


def read_selection_report(path):
    """Re-read a selection report; returns (per-method rows, alpha, layer, chosen).

    The rows are TestResult objects for the stopping sequence, so feeding
    them back through select_r reproduces the chosen r.
    """
    alpha, layer = 0.05, "raw"
    chosen: dict[str, int] = {}
    rows: dict[str, list[TestResult]] = {}
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("alpha:"):
                    alpha = float(body.split(":", 1)[1])
                elif body.startswith("layer:"):
                    layer = body.split(":", 1)[1].strip()
                elif body.startswith("chosen_r["):
                    method = body[len("chosen_r[") : body.index("]")]
                    chosen[method] = int(body.split(":", 1)[1])
                continue
            if line.startswith("method\t") or not line:
                continue
            method, r, stat, pval, _fs, _ss, stopping = line.split("\t")
            if stopping != "1":
                continue
            rows.setdefault(method, []).append(
                TestResult(method=method, r=int(r), statistic=float(stat), pvalue=float(pval))
            )
    return rows, alpha, layer, chosen


@main.command("select")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--method", type=click.Choice(["spacings", "score", "ed", "ccdf", "all"]),
              default="ccdf", show_default=True)
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--layer", type=click.Choice(["raw", "forwardstop", "strongstop"]),
              default="raw", show_default=True)
@click.option("--ns", is_flag=True, help="Nonstationary (rGEV11) fits.")
@click.option("--rmax", type=int, default=None, help="Largest order tested (default: all columns).")
@click.option("--boot", "n_boot", type=int, default=1000, show_default=True,
              help="Bootstrap samples for the score test.")
@click.option("--seed", type=int, default=None, help="Seed for the score-test bootstrap.")
@click.option("--penalize/--no-penalize", default=True, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Report path (default: <input>_select.tsv).")
@click.option("--jobs", "n_jobs", type=int, default=1, show_default=True,
              help="Worker processes for the score-test bootstrap.")
def cmd_select(file, method, alpha, layer, ns, rmax, n_boot, seed, penalize, out, n_jobs):
    """Run the sequential selection of r on FILE."""
    sample, years = _load(file, ns)
    if ns and method == "score":
        raise DataValidationError("the score test is not available with --ns.")
    methods = ("spacings", "ed", "ccdf") if (ns and method == "all") else (
        ("spacings", "score", "ed", "ccdf") if method == "all" else (method,)
    )
    click.echo(f"# invocation: {_invocation()}")
    click.echo(f"# blocks: {sample.n_blocks}   orders: {sample.n_orders}   "
               f"years: {years[0]}-{years[-1]}")
    click.echo("\nMann-Kendall trend screen (top order statistics):")
    click.echo("order\tS\tpvalue")
    for col in range(min(5, sample.n_orders)):
        res = mann_kendall(sample.values[:, col])
        click.echo(f"{col + 1}\t{res.s}\t{res.pvalue:.4f}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        reports = run_selection(
            sample, methods=methods, rmax=rmax, alpha=alpha, layer=layer,
            model="rgev11" if ns else "stationary", penalize=penalize,
            n_boot=n_boot, seed=seed, n_jobs=n_jobs,
        )
    for m, rep in reports.items():
        click.echo(f"\nmethod: {m}   alpha: {alpha}   layer: {layer}")
        click.echo("r\tstatistic\tpvalue\tforwardstop\tstrongstop")
        for diag in rep.diagnostics:
            click.echo(f"{diag.r}\t{_fmt(diag.statistic)}\t{_fmt(diag.pvalue)}\t-\t-\t(diagnostic)")
        for res, fs, ss in zip(rep.results, rep.forwardstop, rep.strongstop):
            click.echo(f"{res.r}\t{_fmt(res.statistic)}\t{_fmt(res.pvalue)}\t{_fmt(fs)}\t{_fmt(ss)}")
        click.echo(f"chosen r ({m}, {rep.layer}): {rep.chosen_r}")
    out = out or str(Path(file).with_suffix("")) + "_select.tsv"
    write_selection_report(out, reports, seed=seed)
    click.echo(f"\nwrote {out}")


@main.command("ppdata")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--method", type=click.Choice(["ccdf", "spacings"]), default="ccdf",
              show_default=True)
@click.option("--rmax", type=int, default=None, help="Largest order (default: all columns).")
@click.option("--penalize/--no-penalize", default=True, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the table here instead of stdout.")
def cmd_ppdata(file, method, rmax, penalize, out):
    """Emit probability-plot data: plotting position (i-0.35)/n vs model value."""
    sample, _ = _load(file, False)
    R = sample.n_orders
    rmax = R if rmax is None else rmax
    if not 1 <= rmax <= R:
        raise DataValidationError(f"rmax must be in [1, {R}], got {rmax}.")
    n = sample.n_blocks
    positions = (np.arange(1, n + 1) - 0.35) / n
    lines = ["r\ti\tposition\tvalue"]
    r_start = 1 if method == "ccdf" else 2
    for r in range(r_start, rmax + 1):
        fit = fit_rgev(sample, r, penalize=penalize)
        if method == "ccdf":
            vals = np.sort(ccdf_values(sample, r, fit.params))
        else:
            vals = np.sort(exp1_cdf(spacings_values(sample, r - 1, fit.params)))
        for i, (pos, val) in enumerate(zip(positions, vals), start=1):
            lines.append(f"{r}\t{i}\t{pos:.6f}\t{val:.6f}")
    body = "\n".join(lines) + "\n"
    if out:
        with open(out, "w") as fh:
            _echo_header(fh)
            fh.write(body)
        click.echo(f"wrote {out}")
    else:
        click.echo(f"# invocation: {_invocation()}")
        click.echo(body, nl=False)


@main.command("experiment")
@click.argument("config_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "outdir", type=click.Path(file_okay=False), default=".",
              show_default=True, help="Directory for results.tsv and manifest.json.")
def cmd_experiment(config_file, outdir):
    """Run the Monte Carlo experiment described by CONFIG_FILE."""
    config = load_config(config_file)
    click.echo(f"# invocation: {_invocation()}")
    click.echo(
        f"running {config.replicates} replicates: population={config.population} "
        f"n={config.n} R={config.n_orders} true_r={config.true_r} "
        f"tests={','.join(config.tests)} seed={config.seed}"
    )
    histograms = run_experiment(config)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    results_path = outdir / "results.tsv"
    with open(results_path, "w") as fh:
        _echo_header(fh, seed=config.seed)
        fh.write("method\tr\tcount\n")
        for method, hist in histograms.items():
            for r in sorted(hist.counts):
                fh.write(f"{method}\t{r}\t{hist.counts[r]}\n")
    manifest = {
        "config": config_as_dict(config),
        "versions": {
            "rgevselect": __version__,
            "numpy": np.__version__,
            "scipy": __import__("scipy").__version__,
        },
        "failures": {m: h.failures for m, h in histograms.items()},
        "replicates": config.replicates,
    }
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    click.echo("\nmethod\tr\tcount")
    for method, hist in histograms.items():
        for r in sorted(hist.counts):
            click.echo(f"{method}\t{r}\t{hist.counts[r]}")
        click.echo(f"# {method}: mode={hist.mode} failures={hist.failures}")
    click.echo(f"\nwrote {results_path} and {outdir / 'manifest.json'}")


def entry() -> None:
    """Console entry point with the documented exit codes."""
    try:
        main(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except click.Abort:
        sys.exit(130)
    except DataValidationError as exc:
        click.echo(f"data error: {exc}", err=True)
        sys.exit(_EXIT_DATA)
    except NumericalError as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(_EXIT_NUMERIC)


if __name__ == "__main__":
    entry()
