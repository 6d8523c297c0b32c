"""Exception types shared across the package.

Everything derives from ``CVQKDError`` so callers (notably the CLI) can
distinguish numeric/domain failures from programming errors.
"""


class CVQKDError(ValueError):
    """Base class for all domain-level failures."""


class DomainError(CVQKDError):
    """An argument lies outside the mathematical domain of an operation."""


class UnphysicalStateError(CVQKDError):
    """A covariance matrix violates the bona fide condition (some nu < 1)."""


class DegenerateConditioningError(CVQKDError):
    """Conditioning on a quadrature with nonpositive variance."""


class UnphysicalInferenceError(CVQKDError):
    """Full-mode inference 2v - 1 would produce a nonpositive variance."""


class TagMismatchError(CVQKDError):
    """Conditional-variance tags do not match the protocol's measurements."""


class InsufficientDataError(CVQKDError):
    """Too few samples to form the requested estimate."""
