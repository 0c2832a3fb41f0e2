"""Exception hierarchy for latlip."""


class LatlipError(ValueError):
    """Base class for every error raised by this package."""


class EmptySpace(LatlipError):
    pass


class NonpositiveWeight(LatlipError):
    pass


class SpaceMismatch(LatlipError):
    pass


class EmptyList(LatlipError):
    pass


class NotPiecewiseLinear(LatlipError):
    pass


class IncompatibleSamples(LatlipError):
    pass


class EmptySamples(LatlipError):
    pass


class SupportTooLarge(LatlipError):
    pass


class ExponentOrder(LatlipError):
    pass


class ZeroMultiplier(LatlipError):
    pass


class DepthOverflow(LatlipError):
    pass


class SOutOfRange(LatlipError):
    pass


class DegenerateGrid(LatlipError):
    pass


class NonzeroAtZero(LatlipError):
    pass


class NotIndicator(LatlipError):
    pass


class GridTooCoarse(LatlipError):
    pass


class ConfigError(LatlipError):
    """Malformed scenario or descriptor; ``where`` names the offending field."""

    def __init__(self, message, where=None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)
