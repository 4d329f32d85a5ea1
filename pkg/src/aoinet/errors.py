"""Exception hierarchy shared by all engines."""


class AoiError(Exception):
    """Base class for all library errors."""


class NetworkValidationError(AoiError):
    """The network description violates the single-source model."""


class MalformedNetwork(NetworkValidationError):
    pass


class NonPositiveRate(NetworkValidationError):
    pass


class SelfLoop(NetworkValidationError):
    pass


class MultipleSources(NetworkValidationError):
    pass


class UnreachableNode(NetworkValidationError):
    pass


class SourceHasIncomingEdge(NetworkValidationError):
    pass


class EmptySubset(AoiError):
    pass


class SubsetContainsVirtualSource(AoiError):
    pass


class NetworkTooLarge(AoiError):
    pass


class OutsideConvergenceRegion(AoiError):
    pass


class QuadratureNotConverged(AoiError):
    def __init__(self, message, error_estimate):
        super().__init__(f"{message} (achieved error estimate {error_estimate:.3e})")
        self.error_estimate = error_estimate


class NotAChain(AoiError):
    pass


class EmptyWindow(AoiError):
    pass


class ThresholdNotRequested(AoiError):
    pass
