"""Exception types shared across the package."""


class BohrsetsError(Exception):
    """Base class for all package errors."""


class EpsilonTooLarge(BohrsetsError):
    """epsilon exceeds the admissible range (the net constant floor would be 0)."""


class NotFound(BohrsetsError):
    """An exhaustive bounded search ended without a qualifying witness."""


class NoBranch(BohrsetsError):
    """Internal consistency failure: the dichotomy produced no valid branch."""


class SizeLimit(BohrsetsError):
    """An enumeration would exceed its configured size cap."""


class InconclusiveComparison(BohrsetsError):
    """A certified comparison could not be resolved at the precision cap."""


class EmptyIntersection(BohrsetsError):
    """Internal failure: the nested-interval refinement found no admissible arc."""


class RatioViolation(BohrsetsError):
    """A growth-ratio precondition on an integer sequence does not hold."""


class OverlapError(BohrsetsError):
    """Stage ranges of a union interleave instead of being separated."""


class ParameterOverflow(BohrsetsError):
    """Requested parameters are representationally infeasible at desk scale."""


class ScheduleError(BohrsetsError):
    """A stage schedule violates its growth bounds."""


class UsageError(BohrsetsError):
    """Bad flags or malformed input files (CLI exit code 2)."""
