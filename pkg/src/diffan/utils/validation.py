"""
Validation utilities for parsing and validating input data.
"""
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd

from ..exceptions import ValidationError


def require(condition: bool, message: str) -> None:
    """Raise ValidationError with message unless condition holds."""
    if not condition:
        raise ValidationError(message)


def check_positive(name: str, value: float) -> None:
    require(value > 0, f"{name} must be positive, got {value}")


def check_probability(name: str, value: float, low_open: bool = True, high_open: bool = True) -> None:
    """Check value lies in (0, 1), with optional closed ends."""
    low_ok = value > 0 if low_open else value >= 0
    high_ok = value < 1 if high_open else value <= 1
    require(low_ok and high_ok, f"{name} must lie in the unit interval, got {value}")


def check_finite(name: str, array: np.ndarray) -> None:
    if not np.all(np.isfinite(array)):
        bad = np.argwhere(~np.isfinite(np.asarray(array)))[0]
        raise ValidationError(f"{name} contains a non-finite entry at index {tuple(int(i) for i in bad)}")


def check_permutation(order: Sequence[int], d: int) -> None:
    """Check that order lists every index in 0..d-1 exactly once."""
    require(len(order) == d, f"ordering has {len(order)} entries, expected {d}")
    require(sorted(int(i) for i in order) == list(range(d)),
            f"ordering {list(order)} is not a permutation of 0..{d - 1}")


def numeric_frame(frame: pd.DataFrame, source: Optional[Path] = None) -> np.ndarray:
    """
    Convert a frame read from CSV into a float matrix.

    Args:
        frame: Frame with one column per variable
        source: File the frame came from, used in the error message

    Returns:
        n x d float64 array

    Raises:
        ValidationError: naming the first column that is not numeric
    """
    where = f" in {source}" if source else ""
    for index, column in enumerate(frame.columns):
        converted = pd.to_numeric(frame[column], errors='coerce')
        if converted.isna().any():
            row = int(np.flatnonzero(converted.isna().to_numpy())[0])
            raise ValidationError(
                f"column {index} ('{column}'){where} is not numeric (first bad row {row})"
            )
    return frame.to_numpy(dtype=np.float64)


def unique_labels(labels: Iterable[str]) -> list:
    labels = [str(label) for label in labels]
    require(len(set(labels)) == len(labels), f"labels must be unique, got {labels}")
    return labels
