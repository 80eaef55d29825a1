"""Exception hierarchy shared by every module."""


class ConvexFTError(Exception):
    pass


class BodySpecError(ConvexFTError, ValueError):
    """A body description (spec string or constructor arguments) is invalid."""


class UnboundedBody(BodySpecError):
    pass


class EmptyInterior(BodySpecError):
    pass


class NonSmoothPoint(ConvexFTError):
    """The requested point lies on a ridge where no unique normal exists."""


class DegeneratePatch(ConvexFTError):
    pass


class QuadratureBudgetExceeded(ConvexFTError):
    """The boundary rule would need more nodes than the configured cap."""


class InsufficientData(ConvexFTError):
    pass


class AllZeros(InsufficientData):
    pass


class DimensionUnsupported(ConvexFTError):
    pass
