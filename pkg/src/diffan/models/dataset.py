"""Observation matrix with column names, and per-column standardization."""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Union

import numpy as np
import pandas as pd

from ..utils.validation import check_finite, numeric_frame, require, unique_labels
from .dag import default_labels


@dataclass(frozen=True)
class Dataset:
    """n x d observations; column j is the variable labels[j]."""

    x: np.ndarray
    labels: List[str] = field(default_factory=list)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        require(x.ndim == 2, f"dataset must be a matrix, got {x.ndim} dimensions")
        require(x.shape[0] >= 1, "dataset needs at least one row")
        check_finite("dataset", x)
        object.__setattr__(self, 'x', x)
        labels = list(self.labels) if self.labels else default_labels(x.shape[1])
        require(len(labels) == x.shape[1], f"{len(labels)} labels for {x.shape[1]} columns")
        object.__setattr__(self, 'labels', unique_labels(labels))

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def columns(self, indices: Sequence[int]) -> "Dataset":
        indices = list(indices)
        return Dataset(self.x[:, indices], [self.labels[i] for i in indices])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.x, columns=self.labels)

    def to_csv(self, path: Union[str, Path]) -> None:
        # repr-exact floats so reruns are byte-identical
        self.to_frame().to_csv(path, index=False, float_format='%.17g')

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "Dataset":
        frame = pd.read_csv(path)
        require(frame.shape[1] >= 1, f"{path}: no columns found")
        return cls(numeric_frame(frame, Path(path)), list(frame.columns))


@dataclass(frozen=True)
class Standardizer:
    """Column means and scales used to map data to zero mean and unit variance."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray) -> "Standardizer":
        mean = x.mean(axis=0)
        scale = x.std(axis=0)
        # constant columns are only centered
        scale = np.where(scale > 0, scale, 1.0)
        return cls(mean, scale)

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.scale

    def to_dict(self) -> Dict[str, list]:
        return {'mean': self.mean.tolist(), 'scale': self.scale.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, list]) -> "Standardizer":
        return cls(np.asarray(data['mean'], dtype=np.float64), np.asarray(data['scale'], dtype=np.float64))
