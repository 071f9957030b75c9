"""Exception hierarchy shared by all zetawb modules.

Exit-code mapping used by the CLI lives in ``zetawb.cli``; library code
raises these types and never calls ``sys.exit``.
"""


class ZetawbError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(ZetawbError, ValueError):
    """An argument is outside its documented domain."""


class ModelError(ZetawbError):
    """A model specification is invalid (non-hyperbolic matrix, reducible
    adjacency, failed group-relator validation, ...)."""


class NonHyperbolicError(ModelError):
    """A matrix that must be hyperbolic has (numerically) an eigenvalue on
    the unit circle."""


class TruncationError(ZetawbError):
    """A requested truncation exceeds what can be computed exactly; the
    message carries a diagnostic of the offending size."""


class EvaluationError(ZetawbError):
    """A zeta/determinant/trace evaluation failed at a specific point
    (boundary collision, near-zero factor, NaN input)."""


class NonConvergenceError(ZetawbError):
    """An iterative estimate (resonance ratio, contour refinement, Newton
    iteration) did not stabilise; carries partial diagnostics."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ValidationFailure(ZetawbError):
    """A catalog or identity check failed; message names the offender."""
