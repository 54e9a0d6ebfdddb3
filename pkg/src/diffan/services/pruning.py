"""
Edge pruning after ordering.

Each node is regressed on an additive basis expansion of every node that
precedes it in the ordering; a predecessor is kept as a parent when the
F-test for its group of basis columns is significant.
"""
import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy import stats
from sklearn.preprocessing import SplineTransformer

from ..models.dag import Dag, Ordering
from ..models.dataset import Dataset
from ..utils.validation import check_probability, require

logger = logging.getLogger(__name__)

BASIS_KINDS = ('polynomial', 'spline')
RIDGE_LAMBDA = 1e-6


@dataclass
class PruneConfig:
    basis: Dict[str, Any] = field(default_factory=lambda: {'kind': 'polynomial', 'degree': 3, 'df': 5})
    alpha: float = 0.001
    max_parents: Optional[int] = None

    def __post_init__(self):
        basis = {'kind': 'polynomial', 'degree': 3, 'df': 5, **dict(self.basis)}
        require(basis['kind'] in BASIS_KINDS, f"basis kind must be one of {BASIS_KINDS}, got '{basis['kind']}'")
        require(int(basis['degree']) >= 1, f"basis degree must be at least 1, got {basis['degree']}")
        require(int(basis['df']) >= 3, f"spline df must be at least 3, got {basis['df']}")
        self.basis = basis
        check_probability('alpha', self.alpha)
        require(self.max_parents is None or int(self.max_parents) >= 0,
                f"max_parents must be non-negative, got {self.max_parents}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PruneConfig":
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def expand(column: np.ndarray, basis: Dict[str, Any]) -> np.ndarray:
    """n x m basis columns for one predecessor, without a constant column."""
    column = np.asarray(column, dtype=np.float64)
    scale = column.std()
    z = (column - column.mean()) / (scale if scale > 0 else 1.0)
    if basis['kind'] == 'polynomial':
        return np.column_stack([z ** p for p in range(1, int(basis['degree']) + 1)])
    spline = SplineTransformer(n_knots=int(basis['df']) - 1, degree=3, include_bias=False)
    return spline.fit_transform(z[:, None])


def _rss(design: np.ndarray, y: np.ndarray) -> float:
    """Residual sum of squares of the least-squares fit; ridge when the design is rank deficient."""
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        logger.warning("rank deficient design (%d of %d columns), using ridge %.0e",
                       rank, design.shape[1], RIDGE_LAMBDA)
        gram = design.T @ design + RIDGE_LAMBDA * np.eye(design.shape[1])
        coef = np.linalg.solve(gram, design.T @ y)
    residual = y - design @ coef
    return float(residual @ residual)


def group_pvalues(y: np.ndarray, groups: List[np.ndarray]) -> np.ndarray:
    """
    F-test p-value for dropping each group of columns from the joint additive fit.

    Args:
        y: Target column
        groups: Basis columns of each candidate parent

    Returns:
        One p-value per group
    """
    n = y.shape[0]
    intercept = np.ones((n, 1))
    full = np.hstack([intercept] + groups)
    dof = n - full.shape[1]
    require(dof >= 1, f"{n} rows are too few for a fit with {full.shape[1]} columns")
    rss_full = _rss(full, y)

    pvalues = np.ones(len(groups))
    for index, group in enumerate(groups):
        reduced = np.hstack([intercept] + [g for k, g in enumerate(groups) if k != index])
        rss_reduced = _rss(reduced, y)
        q = group.shape[1]
        if rss_full <= 0:
            pvalues[index] = 0.0 if rss_reduced > 0 else 1.0
            continue
        statistic = max(rss_reduced - rss_full, 0.0) / q / (rss_full / dof)
        pvalues[index] = stats.f.sf(statistic, q, dof)
    return pvalues


def select_parents(data: Dataset, node: int, candidates: List[int], cfg: PruneConfig) -> Tuple[List[int], np.ndarray]:
    if not candidates:
        return [], np.empty(0)
    groups = [expand(data.x[:, j], cfg.basis) for j in candidates]
    pvalues = group_pvalues(data.x[:, node], groups)
    keep = [(p, j) for p, j in zip(pvalues, candidates) if p < cfg.alpha]
    keep.sort()
    if cfg.max_parents is not None:
        keep = keep[:int(cfg.max_parents)]
    return sorted(j for _, j in keep), pvalues


def prune(data: Dataset, order: Ordering, cfg: Optional[PruneConfig] = None) -> Dag:
    """
    Select parents for every node among its predecessors in order.

    Every edge goes from an earlier to a later node, so the result is acyclic.
    """
    cfg = cfg or PruneConfig()
    require(len(order) == data.d, f"ordering has {len(order)} nodes, data has {data.d} columns")
    adj = np.zeros((data.d, data.d), dtype=np.int8)
    pi = list(order)
    for position, node in enumerate(pi):
        parents, _ = select_parents(data, node, pi[:position], cfg)
        adj[parents, node] = 1
        logger.debug("node %d: %d of %d predecessors kept", node, len(parents), position)
    return Dag(adj, list(data.labels))
