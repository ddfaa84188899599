"""Exception types raised by the library."""


class LssotError(ValueError):
    """Base class for all library errors."""


class NegativeWeight(LssotError):
    pass


class EmptyMeasure(LssotError):
    pass


class GridMismatch(LssotError):
    pass


class BadDimension(LssotError):
    pass


class DimensionMismatch(LssotError):
    pass


class AllPointsCapped(LssotError):
    """Every point of the cloud falls inside the epsilon-cap of a slice."""


class EmbeddingFailed(LssotError):
    pass


class SliceSetMismatch(LssotError):
    pass


class NoCommonSlices(LssotError):
    pass


class BadKappa(LssotError):
    pass
