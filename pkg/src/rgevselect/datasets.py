"""Bundled example data."""
from __future__ import annotations

from importlib import resources

from .rlos import RLosSample, load_rlos_csv

__all__ = ["example_rainfall_path", "load_example_rainfall"]

_RAINFALL = "annual_top20_rainfall.csv"


def example_rainfall_path() -> str:
    """Path of the bundled example dataset.

    A synthetic daily-rainfall-style record: the 20 largest events per year
    (mm) over the 50 years 1973-2022, shipped so the documentation examples
    and the acceptance suite run out of the box.
    """
    return str(resources.files("rgevselect.data").joinpath(_RAINFALL))


def load_example_rainfall() -> tuple[RLosSample, "object"]:
    """Load the bundled example dataset; returns (sample, years)."""
    return load_rlos_csv(example_rainfall_path(), units="mm")
