"""Exception types shared across the package."""


class QuadliftError(Exception):
    """Base class for all quadlift errors."""


class PolyParseError(QuadliftError):
    """Raised on malformed polynomial text. Carries the offending position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class DimensionMismatchError(QuadliftError):
    """Vector/matrix sizes do not agree with the expected layout."""


class DegreeError(QuadliftError):
    """A polynomial exceeds the degree bound required by an operation."""


class RelationError(QuadliftError):
    """A constraint relation is not supported by the requested encoding path."""


class LiftInfeasibleError(QuadliftError):
    """A point violates the strict feasibility required by the lift."""

    def __init__(self, index: int, value: float):
        super().__init__(
            f"inequality {index} evaluates to {value!r}; lift requires a strictly positive value"
        )
        self.index = index
        self.value = value


class TraceBoundError(QuadliftError):
    """The trace bound B is too small for a lifted point."""

    def __init__(self, needed: float, bound: float):
        super().__init__(f"trace bound B={bound!r} is below the lifted squared norm {needed!r}")
        self.needed = needed
        self.bound = bound
