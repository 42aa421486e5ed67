"""Error taxonomy and process exit codes."""
from __future__ import annotations

from typing import Any


class RiemannSurfaceError(Exception):
    """Base class for every error raised by the toolkit."""

    exit_code: int = 1

    def __init__(self, message: str) -> None:
        super().__init__(message)
        self.message = message


class DomainError(RiemannSurfaceError):
    """Invalid input or a violated precondition (zero polynomial, g = 0, ...)."""

    exit_code = 2


class NumericalError(RiemannSurfaceError):
    """A numerical procedure failed to converge.

    Attributes:
        residual: Best residual reached before giving up, if known.
        diagnostics: Free-form context (last good state, worst cycle, ...).
    """

    exit_code = 3

    def __init__(
        self,
        message: str,
        residual: float | None = None,
        diagnostics: dict[str, Any] | None = None
    ) -> None:
        super().__init__(message)
        self.residual = residual
        self.diagnostics = diagnostics or {}


class InconsistencyError(RiemannSurfaceError):
    """An identity that must hold was violated (odd V, bilinear relation, ...)."""

    exit_code = 4
