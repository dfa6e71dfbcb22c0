from typing import Any


class DnlsLabError(Exception):
    """Base class for every error raised by dnls-lab."""


class StencilTooWide(DnlsLabError, ValueError):
    """The stencil does not fit on the periodic lattice (n_points <= 2 * half_width)."""


class SizeMismatch(DnlsLabError, ValueError):
    """Two fields live on different lattices."""


class ResolutionMismatch(DnlsLabError, ValueError):
    """A fine field cannot be folded onto the requested coarse lattice."""


class BandOverflow(DnlsLabError, ValueError):
    """A spectral translation would push energy outside the resolved band."""


class DomainTooSmall(DnlsLabError, ValueError):
    """The periodic box is too short for the wave's decay rate."""


class UnstableStencil(DnlsLabError, ValueError):
    """The stencil symbol is not coercive (stability constant <= 0)."""


class BracketFailure(DnlsLabError, ValueError):
    """The mass-matching bracket does not enclose the target."""


class NoConvergence(DnlsLabError, ArithmeticError):
    """An iterative solver exhausted its budget."""

    def __init__(self, message: str, iterations: int = 0, residual: float = float("nan")) -> None:
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class SymmetryViolation(DnlsLabError, ArithmeticError):
    """An iterate left the real-spectrum (symmetric) subspace."""


class NonFinite(DnlsLabError, ArithmeticError):
    """A NaN or infinity appeared during time stepping."""

    def __init__(self, message: str, trajectory: Any = None, time: float = float("nan")) -> None:
        super().__init__(message)
        self.trajectory = trajectory
        self.time = time


class ProjectionDiverged(DnlsLabError, ArithmeticError):
    """The orbit projection failed; the solution left the neighbourhood of the wave."""

    def __init__(self, message: str, frame: int | None = None, partial: Any = None) -> None:
        super().__init__(message)
        self.frame = frame
        self.partial = partial


class SingularA(DnlsLabError, ArithmeticError):
    """The 2x2 modulation matrix is numerically singular."""


class GateFailure(DnlsLabError, AssertionError):
    """A gated experiment did not meet its acceptance threshold."""
