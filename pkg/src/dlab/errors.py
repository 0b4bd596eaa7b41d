"""Exception hierarchy shared by all dlab modules."""


class DlabError(Exception):
    """Base class; the CLI maps every subclass to exit status 2."""


class SingularPoint(DlabError):
    pass


class DimensionMismatch(DlabError):
    pass


class DimensionUnsupported(DlabError):
    pass


class EmptyShell(DlabError):
    pass


class InvalidSignature(DlabError):
    pass


class GridTooCoarse(DlabError):
    pass


class QuadratureStalled(DlabError):
    pass


class DegeneratePoints(DlabError):
    pass


class NoAscent(DlabError):
    pass


class PhaseMismatch(DlabError):
    pass


class Overflow(DlabError):
    """Raised when a field exceeds the blowup guard; carries the halt time."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class ConfigInvalid(DlabError):
    pass


class IoFailure(DlabError):
    pass
