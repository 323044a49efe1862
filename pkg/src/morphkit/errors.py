"""Exception hierarchy shared across the package.

ValidationError maps to CLI exit code 3, NumericalError to exit code 4.
"""


class MorphkitError(Exception):
    pass


class ValidationError(MorphkitError):
    """Bad input: geometry, task files, tables, out-of-bounds parameters."""


class GeometryError(ValidationError):
    """Degenerate polygon input (repeated vertex, zero-length edge, ...)."""


class ClosureError(ValidationError):
    """An angle vector does not close into an equilateral octagon."""

    def __init__(self, residual: float, message: str | None = None):
        self.residual = float(residual)
        super().__init__(message or f"octagon walk does not close (residual {residual:.3e})")


class NumericalError(MorphkitError):
    """Solver breakdown: non-convergence, divergence, factorization failure."""


class ClosureProjectionError(NumericalError):
    """Newton projection onto the closure manifold did not converge."""

    def __init__(self, residual: float, message: str | None = None):
        self.residual = float(residual)
        super().__init__(message or f"closure projection did not converge (residual {residual:.3e})")


class DivergenceError(NumericalError):
    """Alternating macroscale solve diverged."""

    def __init__(self, message: str, trace=None):
        self.trace = trace
        super().__init__(message)
