"""
Exception hierarchy shared by every seqmem module.

The CLI maps these onto exit codes: configuration problems exit with 1,
numerical failures (blowup, non-convergence, failed training) exit with 2.
"""


class SeqMemError(Exception):
    """Base class for all seqmem errors."""


class InvalidArgumentError(SeqMemError, ValueError):
    """Raised for bad counts, shape mismatches and malformed episode cycles."""


class ConfigError(SeqMemError):
    """Raised when a configuration file or command line cannot be used."""


class NumericalBlowupError(SeqMemError, ArithmeticError):
    """Raised when integration produces non-finite values."""

    def __init__(self, time: float, message: str | None = None) -> None:
        self.time = float(time)
        super().__init__(message or f"non-finite state encountered at t={self.time:.6g}")


class ConvergenceError(SeqMemError, ArithmeticError):
    """Raised when the fixed-point iteration runs out of max_iters."""

    def __init__(self, residual: float, iterations: int) -> None:
        self.residual = float(residual)
        self.iterations = int(iterations)
        super().__init__(
            f"fixed-point iteration did not converge after {self.iterations} "
            f"iterations (residual {self.residual:.3e})"
        )


class TrainingError(SeqMemError):
    """Raised when online learning fails; carries the epoch index."""

    def __init__(self, epoch: int, message: str) -> None:
        self.epoch = int(epoch)
        super().__init__(f"training failed in epoch {self.epoch}: {message}")
