"""Exception hierarchy shared by the solver, the trainer and the CLI."""

from __future__ import annotations


class DGNetError(Exception):
    """Base class for all dgnet errors."""


class ConfigError(DGNetError):
    """Invalid configuration; `path` is the dotted key that failed."""

    def __init__(self, message: str, path: str | None = None):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class MeshError(DGNetError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class BasisError(DGNetError):
    pass


class CheckpointError(DGNetError):
    pass


class NumericalError(DGNetError):
    """Base for failures of the numerics (CLI exit code 3)."""


class NonPhysicalStateError(NumericalError):
    """rho <= 0, p <= 0 or a non-finite value in an element or snapshot."""

    def __init__(self, message: str, element: int | None = None, snapshot: int | None = None):
        where = []
        if snapshot is not None:
            where.append(f"snapshot {snapshot}")
        if element is not None:
            where.append(f"element {element}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.element = element
        self.snapshot = snapshot


class NewtonConvergenceError(NumericalError):
    def __init__(self, iterations: int, residual: float):
        super().__init__(f"Newton did not converge after {iterations} iterations (residual {residual:.3e})")
        self.iterations = iterations
        self.residual = residual


class GMRESStagnationError(NumericalError):
    def __init__(self, residual: float, newton_iteration: int):
        super().__init__(
            f"GMRES stagnated in Newton iteration {newton_iteration} (linear residual {residual:.3e})"
        )
        self.residual = residual
        self.newton_iteration = newton_iteration


class IntegrationError(NumericalError):
    """A time step failed; the original error is chained as __cause__."""

    def __init__(self, step: int, message: str):
        super().__init__(f"step {step}: {message}")
        self.step = step


class NonFiniteGradientError(NumericalError):
    def __init__(self, block: str):
        super().__init__(f"non-finite gradient in parameter block {block!r}")
        self.block = block
