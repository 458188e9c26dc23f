"""Exception hierarchy shared by every module."""


class PathUQError(Exception):
    """Base class for all library errors."""


class EmptyDomain(PathUQError):
    """Objective is +inf at every probed point."""


class NonFinite(PathUQError):
    """A NaN turned up where a number was required."""


class MaxSubdivisions(PathUQError):
    """Adaptive quadrature could not meet its tolerance."""


class NotSPD(PathUQError):
    """Matrix is not symmetric positive-definite."""


class Infinite(PathUQError):
    """Bound is +inf on the whole optimization domain."""


class NonIntegrable(PathUQError):
    """A weight or integrand has no finite integral."""


class SignMismatch(PathUQError):
    """Level and drift have opposite signs, so the hitting time is not a.s. finite."""


class BeyondBranch(PathUQError):
    """Argument lies past the real branch point of a closed-form CGF."""


class BranchExceeded(BeyondBranch):
    """The bootstrap optimizer needs values past the OU branch point."""


class AssumptionViolated(PathUQError):
    """A standing modelling assumption of a scenario does not hold."""


class InvalidPhaseType(PathUQError):
    """(nu, T) is not a valid phase-type representation."""


class NonErgodic(PathUQError):
    """Mean sojourn time is infinite or zero."""


class StateSpaceTooLarge(PathUQError):
    """Path enumeration request exceeds the size cap."""


class AbsContViolation(PathUQError):
    """Alternative model charges a transition the baseline forbids."""


class NotStabilizable(PathUQError):
    """No stabilizing feedback gain could be found."""


class NoConvergence(PathUQError):
    """Iterative solver hit its iteration cap."""


class ConfigError(PathUQError):
    """Scenario configuration is malformed."""
