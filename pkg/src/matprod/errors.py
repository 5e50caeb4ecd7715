"""Exception hierarchy shared by all modules."""


class MatprodError(Exception):
    """Base class for all library errors."""


class StripViolation(MatprodError, ValueError):
    """Evaluation point lies outside the validity strip of a symbol."""


class BranchError(MatprodError, ValueError):
    """A fractional Gamma power would need a non-principal branch."""


class EmptyStrip(MatprodError, ValueError):
    """Two symbols have disjoint strips."""


class SlowDecay(MatprodError, ValueError):
    """Symbol decays too slowly along vertical lines for contour inversion."""


class NonConvergent(MatprodError, RuntimeError):
    """A quadrature or iteration failed to reach its target."""


class QuadratureFailure(NonConvergent):
    """Numerical integration of a weight or moment failed."""


class ParameterOutOfRange(MatprodError, ValueError):
    """Family parameters outside their admissible range."""


class DimensionMismatch(MatprodError, ValueError):
    """Ensembles or factors of different dimension were combined."""


class DegenerateSpectrum(MatprodError, ValueError):
    """Eigenvalue arguments coincide beyond what perturbation can fix."""


class DegenerateParameter(MatprodError, ValueError):
    """Spectral parameters coincide where a Vandermonde divides."""


class SingularDraw(MatprodError, RuntimeError):
    """A sampled matrix stayed singular after the retry budget."""


class McmcNotWarm(MatprodError, RuntimeError):
    """Metropolis chain failed its burn-in diagnostics."""


class NegativeWeight(MatprodError, ValueError):
    """A weight that must be non-negative evaluated negative."""


class ParseError(MatprodError, ValueError):
    """Syntax error in an ensemble expression."""

    def __init__(self, message, offset, expected=()):
        self.offset = int(offset)
        self.expected = tuple(sorted(set(expected)))
        detail = f"{message} at offset {self.offset}"
        if self.expected:
            detail += " (expected one of: " + ", ".join(self.expected) + ")"
        super().__init__(detail)


class SemanticError(MatprodError, ValueError):
    """Well-formed expression with invalid meaning (bad parameters, keys)."""
