"""Exception hierarchy.

Every error carries an optional ``witness`` describing the first concrete
violation found, so callers (and the CLI reports) can print something more
useful than a message string.
"""

from __future__ import annotations

from typing import Any


class LocHilbertError(Exception):
    """Base class for all library errors."""

    def __init__(self, message: str, witness: Any = None):
        super().__init__(message)
        self.witness = witness


# linear algebra kernel
class NonHermitian(LocHilbertError):
    pass


class DidNotConverge(LocHilbertError):
    pass


class NotCommuting(LocHilbertError):
    pass


class NotNormal(LocHilbertError):
    pass


# measure spaces
class MalformedPartition(LocHilbertError, ValueError):
    """A declared partition is not a partition of its point set."""


class InvalidChain(LocHilbertError):
    pass


class IncompatibleFamily(LocHilbertError):
    pass


class NotMeasurable(LocHilbertError):
    pass


# locally Hilbert spaces
class NotLocallyBounded(LocHilbertError):
    pass


class ChainMismatch(LocHilbertError):
    pass


# direct integrals
class InvalidFibers(LocHilbertError):
    pass


class SpaceMismatch(LocHilbertError):
    pass


class UnsupportedFamily(LocHilbertError):
    pass


class NotInFiber(LocHilbertError):
    pass


# disintegration
class NotAbelian(LocHilbertError):
    pass


class SpectrumMismatch(LocHilbertError):
    pass


class ZeroWeightPoint(LocHilbertError):
    pass


class IsometryDefect(LocHilbertError):
    pass


class SurjectivityDefect(LocHilbertError):
    pass
