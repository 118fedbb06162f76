"""Exception types raised across the package."""


class RelMaupError(Exception):
    """Base class for all library errors."""


class CollisionPoint(RelMaupError, ValueError):
    pass


class OutsideHillRegion(RelMaupError, ValueError):
    pass


class InvalidEnergy(RelMaupError, ValueError):
    pass


class InvalidExponent(RelMaupError, ValueError):
    pass


class ConfigError(RelMaupError, ValueError):
    """Raised for malformed configuration documents; ``field`` names the offending entry."""

    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


# homotopy
class AmbiguousWinding(RelMaupError):
    pass


class SampleOnCut(RelMaupError):
    pass


class AmbiguousCrossing(RelMaupError):
    pass


class InvalidDilation(RelMaupError, ValueError):
    pass


# optimizer
class ClassEscape(RelMaupError):
    pass


class NotConverged(RelMaupError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class SeedConstructionFailed(RelMaupError):
    pass


class TrivialClass(RelMaupError, ValueError):
    pass


# reparam
class DegenerateLoop(RelMaupError, ValueError):
    pass


class NonMonotoneTime(RelMaupError):
    pass


class EnergyLawViolated(RelMaupError, ValueError):
    pass


# integrator
class SuperluminalInput(RelMaupError, ValueError):
    pass


class CollisionApproach(RelMaupError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class StepUnderflow(RelMaupError):
    pass


# circular
class NoCircularOrbit(RelMaupError, ValueError):
    pass


class BracketFailure(RelMaupError):
    pass


class RootNotBracketed(RelMaupError):
    pass
