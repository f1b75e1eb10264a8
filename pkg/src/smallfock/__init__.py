"""Sampling and interpolation diagnostics for two-sided small Fock spaces."""

from .errors import CertificateError, ConvergenceError, PreconditionError, SmallFockError
from .fockspace import LaurentVector, SpaceParams
from .geometry import LogPoint, PointSequence

__all__ = [
    "CertificateError",
    "ConvergenceError",
    "LaurentVector",
    "LogPoint",
    "PointSequence",
    "PreconditionError",
    "SmallFockError",
    "SpaceParams",
]

__version__ = "0.1.0"
