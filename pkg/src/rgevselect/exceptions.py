"""Package-level exception types.

Plain ``ValueError`` is used for bad scalar arguments; the classes here mark
conditions the CLI maps to distinct exit codes (1 = data, 2 = numerical).
"""


class DataValidationError(ValueError):
    """Input data violate a structural contract (bad file, bad matrix shape)."""


class DegenerateDataError(DataValidationError):
    """Data carry no usable variation (e.g. all values equal)."""


class NumericalError(RuntimeError):
    """A numerical routine could not produce a usable result."""
