"""Exception hierarchy.

Every error raised on purpose by the package derives from ``GyrostatError`` so
callers (and the command line front end) can map them to exit codes.
"""


class GyrostatError(Exception):
    """Base class for all package errors."""


class ValidationError(GyrostatError, ValueError):
    """Inputs violate a documented precondition."""


class OrderViolation(ValidationError):
    """Central moments are not ordered A <= B <= C."""


class SolidInertiaNonpositive(ValidationError):
    """A central moment does not exceed the liquid's own moment on that axis."""


class NotPermanentAxis(ValidationError):
    """The rotation vector is not an eigenvector of the inertia tensor."""


class UnknownEigenvalue(ValidationError):
    """The requested moment is none of A, B, C."""


class SolverFailure(GyrostatError, RuntimeError):
    """A linear or eigen solver missed its residual tolerance."""


class NoConvergence(SolverFailure):
    """An iterative eigensolver ran out of iterations."""


class ClusterAmbiguous(SolverFailure):
    """Eigenvalues sit too close to the zero-cluster radius to classify."""


class CflViolation(ValidationError):
    """Time step exceeds the explicit stability bound."""


class NonFinite(GyrostatError, FloatingPointError):
    """A state component became NaN or infinite."""


class WindowEmpty(GyrostatError, ValueError):
    """No samples fall in the requested fitting window."""


class UnknownPreset(GyrostatError, KeyError):
    """The named preset does not exist."""

    def __str__(self):
        return str(self.args[0]) if self.args else "unknown preset"


class ParseError(ValidationError):
    """Scenario text is malformed."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + where)


class FormatError(GyrostatError, ValueError):
    """A binary or text artifact has the wrong layout."""


NotAPermanentAxis = NotPermanentAxis
