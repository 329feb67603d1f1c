"""Exception hierarchy shared by every nmforge module."""


class NMForgeError(Exception):
    """Base class for all errors raised by nmforge."""


class ValidationError(NMForgeError, ValueError):
    pass


class NegativeWeight(ValidationError):
    pass


class DuplicateLabel(ValidationError):
    pass


class AllNull(ValidationError):
    pass


class UnknownPoint(ValidationError):
    pass


class NotAbsolutelyContinuous(NMForgeError):
    pass


class MapNotMeasurePreserving(NMForgeError):
    pass


class LevelOutOfRange(NMForgeError, IndexError):
    pass


class ChainNotRefining(NMForgeError):
    pass


class NegativeInput(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class NotAPartition(ValidationError):
    pass


class FiberMismatch(ValidationError):
    pass


class BadExponents(ValidationError):
    pass


class BadRetraction(ValidationError):
    pass


class LiftingsNotCompatible(NMForgeError):
    pass


class UnknownSuite(NMForgeError, KeyError):
    pass


class ScenarioError(ValidationError):
    pass


class DominationFails(NMForgeError):
    """A local operator is not dominated by ``g * (|v| o phi)``.

    ``witness`` holds the offending section, ``point`` the index where the
    bound breaks.
    """

    def __init__(self, message, witness=None, point=None):
        super().__init__(message)
        self.witness = witness
        self.point = point


class InvariantViolation(NMForgeError, AssertionError):
    """An internal consistency guard tripped; indicates a bug or bad input."""
