"""Exception types raised by smallfock."""


class SmallFockError(Exception):
    """Base class for all library errors."""


class PreconditionError(SmallFockError, ValueError):
    """An argument violates a documented precondition.

    Raised for data problems the caller can fix: duplicated points, a density
    window longer than the guard allows, a point window that does not cover
    the truncation, and so on.
    """


class ConvergenceError(SmallFockError, RuntimeError):
    """An adaptive numerical procedure hit its cap without converging."""


class CertificateError(SmallFockError, RuntimeError):
    """A computed quantity failed its own a-posteriori check."""
