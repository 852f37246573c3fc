class ParameterError(ValueError):
    """Invalid argument: out-of-range size, mismatched geometry, bad interval."""


class NumericalError(RuntimeError):
    """A numerical routine failed (eigensolver non-convergence, unstable step)."""


class InvalidDensityError(ValueError):
    """Matrix is not a valid density matrix within tolerance."""
