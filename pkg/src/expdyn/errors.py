"""Exception hierarchy shared by all modules."""


class ExpDynError(Exception):
    """Base class for domain errors (CLI exit code 1)."""


class OverflowGuard(ExpDynError):
    pass


class ZeroPreimage(ExpDynError):
    pass


class BoundaryHit(ExpDynError):
    pass


class OutOfChartedRange(ExpDynError):
    pass


class PullbackCollision(ExpDynError):
    pass


class DepthInsufficient(ExpDynError):
    pass


class NoConvergence(ExpDynError):
    pass


class NotFound(ExpDynError):
    pass


class GammaNotLanding(ExpDynError):
    pass


class InsufficientData(ExpDynError):
    pass


class ZeroCollision(ExpDynError):
    pass


class NonConvergence(ExpDynError):
    pass


class ItineraryMismatch(ExpDynError):
    pass


class ChartEscape(ExpDynError):
    pass


class NotMisiurewicz(ExpDynError):
    def __init__(self, reason):
        super().__init__(reason)
        self.reason = reason


class PrefixNotExponentiallyBounded(ExpDynError):
    pass
