"""Package-wide exception types."""

from __future__ import annotations


class DalangConditionError(RuntimeError):
    """Raised when sampling is requested for a spectral measure whose density
    fails the integrability condition  int g(xi) / (1 + |xi|^2) dxi < inf,
    so the solution field does not exist as a random function."""


class InvariantViolation(RuntimeError):
    """Raised when an internal exactness invariant (representer probe,
    covariance symmetry/PSD, duality) fails beyond its tolerance."""
