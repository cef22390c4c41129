"""Exception types raised across the package."""


class CondensateError(Exception):
    """Base class; `quantity` names the value that failed, when known."""

    def __init__(self, message="", quantity=None):
        super().__init__(message)
        self.quantity = quantity


class NonZeroMean(CondensateError):
    pass


class GridTooSmall(CondensateError):
    pass


class PoleOnPath(CondensateError):
    pass


class ToleranceNotMet(CondensateError):
    pass


class AtPole(CondensateError):
    pass


class AtSingularity(CondensateError):
    pass


class NotARectangle(CondensateError):
    pass


class BalanceViolated(CondensateError):
    pass


class ResidueNotCancelled(CondensateError):
    pass


class DiscriminantNegative(CondensateError):
    pass


class RhoTooLarge(CondensateError):
    pass


class CurveTraceFailed(CondensateError):
    pass


class SeriesDegreeInsufficient(CondensateError):
    pass


class SeriesDiverged(CondensateError):
    pass


class Divergent(CondensateError):
    pass


class NoZeroFound(CondensateError):
    pass


class DegenerateJacobian(CondensateError):
    pass


class NewtonDiverged(CondensateError):
    def __init__(self, message="", quantity=None, history=None):
        super().__init__(message, quantity)
        self.history = history or []


class ConfigInvalid(CondensateError):
    pass
