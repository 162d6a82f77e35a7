"""Exception hierarchy shared by every module of the package."""


class TilingBilliardsError(Exception):
    """Base class for all errors raised by :mod:`tiling_billiards`."""


class DegeneratePolygon(TilingBilliardsError):
    pass


class NonConvex(TilingBilliardsError):
    pass


class NotCyclic(TilingBilliardsError):
    pass


class OnEdge(TilingBilliardsError):
    """A query point lies within tolerance of a tiling edge."""

    def __init__(self, message, address=None, edge=None):
        super().__init__(message)
        self.address = address
        self.edge = edge


class OnVertex(TilingBilliardsError):
    """A query point lies within tolerance of a tiling vertex."""

    def __init__(self, message, vertex=None):
        super().__init__(message)
        self.vertex = vertex


class TangentChord(TilingBilliardsError):
    pass


class TangentCrossing(TilingBilliardsError):
    pass


class DegenerateChord(TilingBilliardsError):
    pass


class HitBreakpoint(TilingBilliardsError):
    pass


class NearVertex(TilingBilliardsError):
    pass


class RightAngledDegenerate(TilingBilliardsError):
    pass


class SingularLattice(TilingBilliardsError):
    pass


class SelfIntersecting(TilingBilliardsError):
    pass


class NoSingularLeaf(TilingBilliardsError):
    pass


class ConfigError(TilingBilliardsError):
    pass
