"""Exception hierarchy shared by every evolog module."""


class EvologError(Exception):
    """Base class; ``name`` is what reports and manifests record."""

    @property
    def name(self) -> str:
        return type(self).__name__


class SingularMatrix(EvologError):
    pass


class NoConvergence(EvologError):
    pass


class Overflow(EvologError):
    def __init__(self, message, coordinate=None):
        super().__init__(message)
        self.coordinate = coordinate


class CertificateFailed(EvologError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class BackwardNotAvailable(EvologError):
    pass


class OutOfDomain(EvologError):
    pass


class RepresentationNotInvertible(EvologError):
    """Raised when I - kappa (U + kappa I)^-1 is singular.

    The partially filled report (forward residual, factor condition,
    commutator) travels with the exception as ``report``.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class IllPosedDirection(EvologError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class UnsupportedDirection(EvologError):
    pass


class GridMismatch(EvologError):
    pass
