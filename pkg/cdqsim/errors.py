"""Exception hierarchy shared by the simulator modules and the CLI."""


class CDQSimError(Exception):
    """Base class for all simulator errors."""


class ConfigError(CDQSimError, ValueError):
    """Invalid experiment configuration or problem parameters."""


class DimensionError(CDQSimError, ValueError):
    """Register size mismatch, or a register too large for dense storage."""


class UnsupportedTermError(CDQSimError, ValueError):
    """A Pauli term the circuit compiler has no decomposition for."""

    def __init__(self, label: str, reason: str = "weight > 2"):
        self.label = label
        super().__init__(f"Cannot compile Pauli term {label!r}: {reason}")


class NumericalError(CDQSimError, ArithmeticError):
    """A numerical routine failed (singular matrix, non-finite values)."""


class ConvergenceError(NumericalError):
    """Iterative refinement stopped before reaching the requested tolerance."""

    def __init__(self, message: str, achieved: float, requested: float):
        self.achieved = achieved
        self.requested = requested
        super().__init__(
            f"{message} (achieved {achieved:.3e}, requested {requested:.3e})"
        )
