"""Exception taxonomy for the workbench.

Every anticipated domain failure raises a subclass of WorkbenchError so that
callers (and the service/CLI layers) can separate bad inputs and convergence
trouble from genuine bugs.  Names follow the failure, not the module that
detects it.
"""

from __future__ import annotations


class WorkbenchError(Exception):
    """Base class for all domain errors raised by this package."""


class PoleError(WorkbenchError):
    """A chart operation hit the other chart's center (z = 0 under 1/z)."""


class ZeroSetProximity(WorkbenchError):
    """Evaluation requested within the validity margin of a section's zero set."""

    def __init__(self, message: str, *, magnitude: float | None = None):
        super().__init__(message)
        self.magnitude = magnitude


class ZeroSetCollision(WorkbenchError):
    """A transported loop met the transported zero set of its section."""


class TruncationOverflow(WorkbenchError):
    """A series product cannot be held by the degree bound within tolerance."""

    def __init__(self, message: str, *, bound: float | None = None):
        super().__init__(message)
        self.bound = bound


class NonGlobalSection(WorkbenchError):
    """A chart-local section was used where a global one is required."""


class NonSimpleLoop(WorkbenchError):
    """Winding check failed: the loop does not bound a disc once."""


class EmbeddednessLost(WorkbenchError):
    """A loop operation produced a curve below the embeddedness threshold."""


class StepSizeTooLarge(WorkbenchError):
    """Integrator Jacobian determinant drifted too far from 1."""


class Resonance(WorkbenchError):
    """Euler operator with sigma = -1 met a nonzero linear-in-p coefficient."""


class NotClosed(WorkbenchError):
    """A form handed to the primitive builder is not closed to tolerance."""


class DegenerateLevel(WorkbenchError):
    """A bracketed fiber level collapsed below the embeddedness threshold."""


class DegreeExceeded(WorkbenchError):
    """An expression compiles to a polynomial beyond the supported degree."""


class ExpressionSyntaxError(WorkbenchError):
    """Malformed expression text; carries the 0-based offset of the failure."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (offset {position})")
        self.position = position


class PreconditionError(WorkbenchError):
    """An operation's stated precondition was violated by the inputs."""
