"""Exception types shared across the diffan package."""
from typing import Any, List, Optional


class DiffanError(Exception):
    """Base class for every error raised by diffan."""

    exit_code = 1


class ValidationError(DiffanError):
    """Input, configuration or file contents failed validation."""

    exit_code = 2


class NumericalError(DiffanError):
    """A computation produced non-finite values or could not be conditioned."""

    exit_code = 3


class TrainingDivergedError(NumericalError):
    """Training loss became non-finite.

    Args:
        message: Human readable description
        checkpoint: State dict of the last epoch with a finite loss
        epoch: Epoch at which divergence was detected
    """

    def __init__(self, message: str, checkpoint: Optional[dict] = None, epoch: int = -1):
        super().__init__(message)
        self.checkpoint = checkpoint
        self.epoch = epoch


class OrderingAbortedError(NumericalError):
    """Leaf search could not continue; the leaves found so far are attached."""

    def __init__(self, message: str, partial_order: Optional[List[int]] = None, cause: Any = None):
        super().__init__(message)
        self.partial_order = list(partial_order or [])
        self.cause = cause
