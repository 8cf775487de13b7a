"""Exception hierarchy shared across the package."""


class PhsafeError(Exception):
    """Base class for all package errors."""


class SingularModelError(PhsafeError):
    """A model matrix (typically the mass matrix) is singular at the queried state."""


class RankDeficientInputError(PhsafeError):
    """The input map lost column rank where a pseudo-inverse was required."""


class MatchingViolationError(PhsafeError):
    """The requested potential shaping cannot be realised through the input matrix."""


class ConstraintSingularError(PhsafeError):
    """The barrier constraint row vanished (L_g h ~ 0) while the constraint is violated."""


class DivergenceError(PhsafeError):
    """The integrated state left the representable range (NaN/Inf)."""


class ConfigError(PhsafeError):
    """A scenario configuration file is malformed or inconsistent."""
