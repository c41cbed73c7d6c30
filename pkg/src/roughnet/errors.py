"""Exception hierarchy for roughnet."""


class RoughNetError(Exception):
    """Base class for every error raised by this package."""


class OutOfDomain(RoughNetError, ValueError):
    pass


class NotPositiveDefinite(RoughNetError, ValueError):
    pass


class GraphDisconnected(RoughNetError):
    pass


class NoGeodesicOracle(RoughNetError):
    pass


class RankDeficient(RoughNetError, ValueError):
    pass


class LeftDomain(RoughNetError):
    """An integrated curve left the chart domain."""


class EndpointMismatch(RoughNetError, ValueError):
    pass


class NotBetaLong(RoughNetError, ValueError):
    pass


class Disconnected(RoughNetError):
    """Two net points are not joined by any path of neighbors."""


class EmptyFactor(RoughNetError, ValueError):
    pass


class Unfittable(RoughNetError):
    pass


class EmptyImage(RoughNetError, ValueError):
    pass


class NotFull(RoughNetError):
    pass


class InvalidConstants(RoughNetError, ValueError):
    pass


class SeparationViolated(RoughNetError):
    def __init__(self, message, pair=None, distance=None):
        super().__init__(message)
        self.pair = pair
        self.distance = distance


class FullnessViolated(RoughNetError):
    def __init__(self, message, probe=None, gap=None):
        super().__init__(message)
        self.probe = probe
        self.gap = gap


class CollisionDetected(RoughNetError):
    pass


class HypothesisFailed(RoughNetError):
    """A hypothesis gate of the main-theorem pipeline did not pass.

    ``which`` names the gate (``"trivial-holonomy"``, ``"rif"``, ``"hlc"``,
    ``"admissibility"``); ``report`` carries whatever partial report was
    assembled before the failure.
    """

    def __init__(self, which, message="", report=None):
        super().__init__(f"hypothesis gate '{which}' failed" + (f": {message}" if message else ""))
        self.which = which
        self.report = report


class ConfigError(RoughNetError, ValueError):
    pass


class Mismatch(RoughNetError):
    def __init__(self, path, message=""):
        super().__init__(message or f"reports differ at {path}")
        self.path = path
