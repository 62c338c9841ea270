from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .report import SolveReport


class KGPException(Exception):
    """Base class for all exceptions raised by kgp."""

    message: str

    def __init__(self, message: str):
        self.message = message
        super().__init__(message)


class UserError(KGPException):
    """Raised when the caller passes invalid input or configuration."""


class SpectrumCollision(KGPException):
    """Raised when -b is an eigenvalue of the d'Alembert operator, i.e. j^2 - k^2 = -b for some
    mode. L + b is then not invertible and the H-norm is undefined.
    """

    b: float
    """The offending mass parameter."""

    witness: tuple[int, int] | None
    """A mode (j, k) with j^2 - k^2 = -b, when one is known."""

    def __init__(self, b: float, witness: tuple[int, int] | None = None):
        self.b = b
        self.witness = witness
        detail = f" (mode {witness} has eigenvalue {-b:g})" if witness else ""
        super().__init__(f"-b = {-b:g} lies in the spectrum of L{detail}")


class TruncationMismatch(KGPException):
    """Raised when two fields on different truncations are combined."""


class AliasedGrid(KGPException):
    """Raised when a grid is too coarse to represent a truncation without aliasing."""


class NonPositiveAmplitude(KGPException):
    """Raised when a nonlinearity amplitude a(t, x) is not bounded below by a positive constant."""


class NotInRange(KGPException):
    """Raised when a source term violates the range condition of L."""

    sup_violation: float
    """The sup norm of the range-condition trace."""

    def __init__(self, sup_violation: float, tolerance: float):
        self.sup_violation = sup_violation
        super().__init__(
            f"source is not in the range of L: range condition sup {sup_violation:.6g} "
            f"exceeds {tolerance:g}"
        )


class NotKernel(KGPException):
    """Raised when a field expected to lie in ker L carries non-kernel modes."""


class MaxIterations(KGPException):
    """Raised when an iteration exhausts its budget without meeting its tolerance."""

    report: SolveReport | None
    """The partial report at the point the iteration stopped."""

    def __init__(self, message: str, report: SolveReport | None = None):
        self.report = report
        super().__init__(message)


class LinearSolveBreakdown(KGPException):
    """Raised when the inner Krylov solve breaks down or returns a non-finite step."""


class NoNontrivialFound(KGPException):
    """Raised by a strict nontrivial search when every run collapsed to zero or diverged."""
