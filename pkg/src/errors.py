"""Exception hierarchy shared by all fklab modules."""


class FKLabError(Exception):
    """Base class for every error raised deliberately by fklab."""


class InvalidParameterError(FKLabError, ValueError):
    """A numeric or structural argument lies outside its admissible range."""


class TooLargeError(FKLabError):
    """Exact enumeration was requested on a domain above the configured edge limit."""


class UnsupportedDomainError(FKLabError):
    """The operation has no meaning on this kind of domain."""


class UnsupportedError(FKLabError):
    """The requested sampler does not exist for these parameters."""


class NotOnPathError(FKLabError):
    """A medial edge is not on the path it was looked up in."""


class ComplexSpinUnsupportedError(FKLabError):
    """q lies outside [0, 4], where the spin would be complex."""


class WrongObservableError(FKLabError):
    """The observable is only defined for another value of q."""


class ExcludedSiteError(FKLabError):
    """The site carries the right-hand side constant and has no coefficient."""


class UndefinedVertexError(FKLabError):
    """A vertex observable was requested at a boundary medial vertex."""
