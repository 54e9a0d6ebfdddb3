"""
Score evaluation over the not-yet-ordered nodes, with deciduous-score residues.

A score function maps one sample x (shape d) and a time t to a d-vector. The
trained denoiser is proportional to the score with a negative factor at each
t; every quantity used for leaf search (variance argmin, and the residue,
which is degree-1 homogeneous) is unaffected by that factor.

After a leaf l is removed the score over the remaining nodes is corrected by
subtracting

    Delta_l(x) = J_l(x) * s_l(x) / J_ll(x),

where J_l is the gradient of the l-th score output. Residues are kept as
closures and re-evaluated on every new batch.
"""
import logging
from typing import Callable, List, Optional, Tuple

import torch
from torch.func import grad, grad_and_value, jacrev, vjp, vmap

from ..exceptions import NumericalError
from ..models.score_net import ScoreNet
from ..utils.validation import require
from .neural import as_float64

logger = logging.getLogger(__name__)

ScoreFunction = Callable[[torch.Tensor, torch.Tensor], torch.Tensor]

RESIDUE_MODES = ('chained', 'direct')
EPS_DIV = 1e-8
MAX_EXCLUDED_FRACTION = 0.5


def network_score(net: ScoreNet) -> ScoreFunction:
    """Per-sample view of the network, for use under torch.func transforms."""

    def score(x: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        return net(x.unsqueeze(0), t.reshape(1)).squeeze(0)

    return score


def residue_function(base: ScoreFunction, leaf: int, eps_div: float = EPS_DIV) -> ScoreFunction:
    """
    Delta_leaf of the score `base`, as a per-sample function.

    Samples where |J_ll| < eps_div get a zero residue; callers exclude them
    from statistics through ScoreField.excluded_samples.
    """

    def residue(x: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        row, value = grad_and_value(lambda z: base(z, t)[leaf])(x)
        denom = row[leaf]
        small = denom.abs() < eps_div
        ratio = torch.where(small, torch.zeros_like(value), value / torch.where(small, torch.ones_like(denom), denom))
        return row * ratio

    return residue


def _subtract(score: ScoreFunction, residue: ScoreFunction) -> ScoreFunction:
    def updated(x: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        return score(x, t) - residue(x, t)

    return updated


def deciduous_step(base: ScoreFunction, leaf: int, eps_div: float = EPS_DIV) -> ScoreFunction:
    """
    base minus its own Delta_leaf.

    One vector-Jacobian product yields both the score and J_leaf, so each
    chained removal costs a single extra reverse sweep of base.
    """

    def updated(x: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        value, pullback = vjp(lambda z: base(z, t), x)
        (row,) = pullback(torch.eye(value.shape[-1], dtype=value.dtype)[leaf])
        denom = row[leaf]
        small = denom.abs() < eps_div
        ratio = torch.where(small, torch.zeros_like(denom), value[leaf] / torch.where(small, torch.ones_like(denom), denom))
        return value - row * ratio

    return updated


class ScoreField:
    """
    Score restricted to active nodes, updated for the leaves removed so far.

    Args:
        score_fn: Per-sample score function over all d nodes
        d: Number of nodes
        residue: Apply deciduous residues for removed leaves
        residue_mode: 'chained' derives each residue from the score already
            updated for the earlier removals, which is exact but nests one
            derivative per removal; 'direct' derives every residue from
            score_fn itself, a first-order shortcut that is exact only for
            the first removal
        eps_div: Threshold on |J_ll| below which a sample is excluded
    """

    def __init__(self, score_fn: ScoreFunction, d: int, residue: bool = True,
                 residue_mode: str = 'chained', eps_div: float = EPS_DIV):
        require(residue_mode in RESIDUE_MODES, f"residue_mode must be one of {RESIDUE_MODES}, got '{residue_mode}'")
        self.score_fn = score_fn
        self.d = int(d)
        self.residue = residue
        self.residue_mode = residue_mode
        self.eps_div = float(eps_div)
        self.removed: List[int] = []

    @classmethod
    def from_net(cls, net: ScoreNet, **kwargs) -> "ScoreField":
        return cls(network_score(as_float64(net)), net.d, **kwargs)

    @property
    def active(self) -> List[int]:
        removed = set(self.removed)
        return [i for i in range(self.d) if i not in removed]

    def remove(self, leaf: int) -> None:
        """Register leaf as ordered; its residue applies from the next evaluation."""
        require(leaf in self.active, f"node {leaf} is not active")
        self.removed.append(int(leaf))

    def mask(self, batch: torch.Tensor) -> torch.Tensor:
        """Zero the columns of removed leaves."""
        batch = batch.clone()
        if self.removed:
            batch[:, self.removed] = 0.0
        return batch

    def _stages(self) -> Tuple[ScoreFunction, List[Tuple[ScoreFunction, int]]]:
        """Updated score and the (residue base, leaf) pair of every removal."""
        stages = []
        score = self.score_fn
        for leaf in self.removed:
            if self.residue_mode == 'chained':
                stages.append((score, leaf))
                score = deciduous_step(score, leaf, self.eps_div)
            else:
                stages.append((self.score_fn, leaf))
                score = _subtract(score, residue_function(self.score_fn, leaf, self.eps_div))
        return score, stages

    def updated_score(self) -> ScoreFunction:
        """Per-sample score over all d outputs; entries of removed nodes are meaningless."""
        if not self.residue:
            return self.score_fn
        score, _ = self._stages()
        return score

    def _active_fn(self, active: Optional[List[int]] = None) -> ScoreFunction:
        score = self.updated_score()
        index = torch.as_tensor(self.active if active is None else active, dtype=torch.long)

        def active_score(x: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
            return score(x, t)[index]

        return active_score

    @staticmethod
    def _inputs(batch, t) -> Tuple[torch.Tensor, torch.Tensor]:
        return torch.as_tensor(batch, dtype=torch.float64), torch.as_tensor(float(t), dtype=torch.float64)

    def score_eval(self, batch, t) -> torch.Tensor:
        """k x |active| score of the batch, residues included."""
        batch, t = self._inputs(batch, t)
        return vmap(self._active_fn(), in_dims=(0, None))(batch, t)

    def hessian_diag(self, batch, t) -> torch.Tensor:
        """
        k x |active| diagonal of the updated score's Jacobian.

        The derivative runs through the residue expressions as well.
        """
        batch, t = self._inputs(batch, t)
        active = self.active
        jac = vmap(jacrev(self._active_fn(active)), in_dims=(0, None))(batch, t)
        rows = torch.arange(len(active))
        return jac[:, rows, torch.as_tensor(active)]

    def deciduous_residue(self, batch, t, leaf: int) -> Tuple[torch.Tensor, torch.Tensor]:
        """
        Residue of removing `leaf` now, on the active nodes other than leaf.

        Returns:
            (k x (|active| - 1) residue, k boolean flags marking |J_ll| < eps_div)
        """
        require(leaf in self.active, f"node {leaf} is not active")
        batch, t = self._inputs(batch, t)
        base = self.updated_score() if self.residue_mode == 'chained' and self.residue else self.score_fn
        others = torch.as_tensor([i for i in self.active if i != leaf], dtype=torch.long)
        values = vmap(residue_function(base, leaf, self.eps_div), in_dims=(0, None))(batch, t)
        denom = vmap(lambda x: grad(lambda z: base(z, t)[leaf])(x)[leaf])(batch)
        return values[:, others], denom.abs() < self.eps_div

    def excluded_samples(self, batch, t) -> torch.Tensor:
        """k flags: some removed leaf had |J_ll| < eps_div at this sample."""
        batch, t = self._inputs(batch, t)
        flags = torch.zeros(batch.shape[0], dtype=torch.bool)
        if not self.residue:
            return flags
        for base, leaf in self._stages()[1]:
            denom = vmap(lambda x, b=base, l=leaf: grad(lambda z: b(z, t)[l])(x)[l])(batch)
            flags |= denom.abs() < self.eps_div
        return flags

    def leaf_variances(self, batch, t) -> Tuple[torch.Tensor, int]:
        """
        Variance over the batch of each active node's Hessian diagonal.

        Returns:
            (|active| variances, number of excluded samples)

        Raises:
            NumericalError: if more than half the samples are excluded
        """
        diag = self.hessian_diag(batch, t)
        excluded = self.excluded_samples(batch, t)
        n_excluded = int(excluded.sum())
        if n_excluded > MAX_EXCLUDED_FRACTION * diag.shape[0] or diag.shape[0] - n_excluded < 2:
            raise NumericalError(
                f"{n_excluded} of {diag.shape[0]} samples have |H_ll| < {self.eps_div:g}; "
                f"removed leaves {self.removed}")
        if n_excluded:
            logger.warning("excluding %d samples with near-zero leaf curvature", n_excluded)
        kept = diag[~excluded]
        if not torch.isfinite(kept).all():
            raise NumericalError("non-finite Hessian diagonal")
        return kept.var(dim=0), n_excluded
