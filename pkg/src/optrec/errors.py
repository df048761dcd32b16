"""Exception types shared across the toolkit."""


class OptrecError(Exception):
    """Base class for all toolkit errors."""


class RegimeError(OptrecError):
    """Exponent triple does not belong to any supported regime."""


class DomainError(OptrecError):
    """Argument outside the mathematical domain of an operation."""


class DimensionError(OptrecError):
    """Array or point dimension does not match the problem dimension."""


class DegenerateError(OptrecError):
    """A derived quantity is degenerate (zero denominator, empty range)."""


class ConvergenceError(OptrecError):
    """Iterative procedure exhausted its budget without converging."""


class SymmetryError(OptrecError):
    """Constraint-weight integrals are not symmetric within tolerance."""


class AsymmetryError(OptrecError):
    """Constraints cannot share a common multiplier within tolerance."""


class HypothesisError(OptrecError):
    """Closed-form hypotheses are violated by the supplied parameters."""


class AAViolation(OptrecError):
    """A user-supplied spectral factor fails the admissibility bound."""


class SizeError(OptrecError):
    """Instance too large for an exhaustive procedure."""
