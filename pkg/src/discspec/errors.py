"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class DiscSpecError(Exception):
    """Base class for all errors raised by discspec."""


class PreconditionError(DiscSpecError, ValueError):
    """An operation was called on input outside its domain."""


class DiscreteSpectrumRequired(PreconditionError):
    """The system is not invertible, so it has no discrete spectrum."""


class InvarianceRequired(PreconditionError):
    """A measure is not invariant under the dynamics.

    ``witness`` is the first state whose mass is not transported correctly.
    """

    def __init__(self, message: str, witness: int):
        super().__init__(message)
        self.witness = witness


class FullSupportRequired(PreconditionError):
    """A measure or base weight vanishes somewhere it must be positive."""


class SizeBoundExceeded(PreconditionError):
    """Exhaustive search was requested on an input above the size bound."""


class VerificationError(DiscSpecError, AssertionError):
    """A self-verifying postcondition failed.

    This always indicates a bug, never bad user input.
    """


class DocumentError(DiscSpecError, ValueError):
    """A document could not be parsed or violates its schema."""
