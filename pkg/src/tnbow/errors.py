"""Exception types raised across the package."""


class TNBowError(Exception):
    """Base class."""


class CenterCollision(TNBowError):
    pass


class OnDiracString(TNBowError):
    pass


class ChartBoundary(TNBowError):
    pass


class GridTooCoarse(TNBowError):
    pass


class ShapeMismatch(TNBowError):
    pass


class PoleEncountered(TNBowError):
    def __init__(self, msg: str, s_pole: float | None = None):
        super().__init__(msg)
        self.s_pole = s_pole


class RankMismatch(TNBowError):
    pass


class GridMismatch(TNBowError):
    pass


class DegenerateGauge(TNBowError):
    pass


class StringIntersection(TNBowError):
    pass


class NoSpectralGap(TNBowError):
    pass


class RankNotOne(TNBowError):
    pass


class ConfigInvalid(TNBowError):
    pass


class SuiteUnknown(TNBowError):
    pass


class IoError(TNBowError):
    pass
