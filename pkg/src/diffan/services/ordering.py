"""
Topological ordering by iterative leaf removal.

Variants:
    residue  -- one trained network; removed leaves are masked and the score
                is corrected with deciduous residues
    masking  -- one trained network; removed leaves are only masked
    greedy   -- the network is retrained on the remaining columns after
                every removal
"""
import logging
import time
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
import torch

from ..exceptions import NumericalError, OrderingAbortedError
from ..models.dag import Ordering
from ..models.dataset import Dataset
from ..models.score_net import ScoreNet
from ..utils.validation import check_permutation, require
from .score_field import EPS_DIV, RESIDUE_MODES, ScoreField, ScoreFunction

logger = logging.getLogger(__name__)

VARIANTS = ('residue', 'masking', 'greedy')


@dataclass
class OrderConfig:
    variant: str = 'masking'
    k: int = 64
    n_votes: int = 10
    residue_mode: str = 'chained'
    use_mask: bool = True
    resample_per_vote: bool = False
    fixed_t: Optional[int] = None
    eps_div: float = EPS_DIV
    seed: int = 0

    def __post_init__(self):
        require(self.variant in VARIANTS, f"variant must be one of {VARIANTS}, got '{self.variant}'")
        require(self.residue_mode in RESIDUE_MODES, f"residue_mode must be one of {RESIDUE_MODES}")
        require(int(self.k) >= 2, f"ordering batch size k must be at least 2, got {self.k}")
        require(int(self.n_votes) >= 1, f"n_votes must be at least 1, got {self.n_votes}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "OrderConfig":
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class IterationDiagnostics:
    iteration: int
    leaf: int
    active: List[int]
    times: List[int] = field(default_factory=list)
    variances: List[np.ndarray] = field(default_factory=list)
    votes: List[int] = field(default_factory=list)
    excluded: List[int] = field(default_factory=list)
    seconds: float = 0.0


@dataclass
class OrderingResult:
    ordering: Ordering
    leaf_first: List[int]
    diagnostics: List[IterationDiagnostics] = field(default_factory=list)
    seconds: float = 0.0

    def diagnostics_frame(self) -> pd.DataFrame:
        """Long form: one row per (iteration, vote, active node)."""
        rows = []
        for diag in self.diagnostics:
            if not diag.times:
                rows.append({'iteration': diag.iteration, 'chosen_leaf': diag.leaf, 't': None,
                             'vote': diag.leaf, 'node': diag.leaf, 'variance': None,
                             'excluded': 0, 'seconds': diag.seconds})
            for t, vote, variances, excluded in zip(diag.times, diag.votes, diag.variances, diag.excluded):
                for node, variance in zip(diag.active, variances):
                    rows.append({'iteration': diag.iteration, 'chosen_leaf': diag.leaf, 't': t,
                                 'vote': vote, 'node': node, 'variance': float(variance),
                                 'excluded': excluded, 'seconds': diag.seconds})
        return pd.DataFrame(rows, columns=['iteration', 'chosen_leaf', 't', 'vote', 'node',
                                           'variance', 'excluded', 'seconds'])

    def variance_frame(self) -> pd.DataFrame:
        """Per iteration, each active node's Hessian-diagonal variance averaged over votes."""
        frame = self.diagnostics_frame().dropna(subset=['variance'])
        return frame.groupby(['iteration', 'node'], as_index=False)['variance'].mean()


def reverse_to_root_order(pi_leaf_first: Sequence[int]) -> Ordering:
    """Turn the leaf-first removal list into a root-first Ordering."""
    check_permutation(pi_leaf_first, len(pi_leaf_first))
    return Ordering(tuple(reversed([int(i) for i in pi_leaf_first])))


def find_leaf(field_: ScoreField, batch, t) -> int:
    """
    Active node whose Hessian diagonal varies least over the batch.

    Ties go to the smallest node index.
    """
    active = field_.active
    if len(active) == 1:
        return active[0]
    variances, _ = field_.leaf_variances(batch, t)
    return active[int(np.argmin(variances.detach().numpy()))]


def majority_vote(votes: Sequence[int], variance_sums: Dict[int, float]) -> int:
    """Most frequent vote; ties go to the lowest summed variance, then the lowest index."""
    counts = Counter(votes)
    best = max(counts.values())
    tied = [node for node, count in counts.items() if count == best]
    return min(tied, key=lambda node: (variance_sums.get(node, np.inf), node))


def vote_times(T: int, cfg: OrderConfig) -> List[int]:
    if cfg.fixed_t is not None:
        require(0 <= int(cfg.fixed_t) <= T, f"fixed_t must lie in [0, {T}]")
        return [int(cfg.fixed_t)]
    return [int(t) for t in np.linspace(0, T, int(cfg.n_votes), endpoint=False)]


def _sample_batch(x: np.ndarray, k: int, rng: np.random.Generator) -> torch.Tensor:
    rows = rng.choice(x.shape[0], size=min(int(k), x.shape[0]), replace=False)
    return torch.as_tensor(x[rows], dtype=torch.float64)


def order(source: Union[ScoreNet, ScoreFunction], data: Dataset, cfg: OrderConfig, *,
          T: int = 100, retrain: Optional[Callable[[Dataset], ScoreNet]] = None,
          on_iteration: Optional[Callable[[IterationDiagnostics], None]] = None) -> OrderingResult:
    """
    Order the columns of data root-first by removing one leaf per iteration.

    Args:
        source: Trained network, or a per-sample score function (oracle)
        data: Observations in the network's standardized space
        cfg: Variant, batch size, vote grid and seed
        T: Diffusion steps, when source is a plain score function
        retrain: Greedy variant only; trains a network on a column subset
        on_iteration: Called with each iteration's diagnostics

    Raises:
        OrderingAbortedError: with the leaves found so far, if the leaf test or
            a greedy retraining fails numerically
    """
    is_net = isinstance(source, ScoreNet)
    T = source.T if is_net else int(T)
    if cfg.variant == 'greedy':
        require(retrain is not None, "the greedy variant needs a retrain function")
    d = data.d
    require(not is_net or source.d == d, f"network has {source.d if is_net else d} outputs, data has {d} columns")

    rng = np.random.default_rng(cfg.seed)
    times = vote_times(T, cfg)
    residue = cfg.variant == 'residue'
    if is_net:
        field_ = ScoreField.from_net(source, residue=residue, residue_mode=cfg.residue_mode, eps_div=cfg.eps_div)
    else:
        field_ = ScoreField(source, d, residue=residue, residue_mode=cfg.residue_mode, eps_div=cfg.eps_div)

    leaf_first: List[int] = []
    diagnostics: List[IterationDiagnostics] = []
    started = time.perf_counter()

    for iteration in range(d):
        tick = time.perf_counter()
        active = [i for i in range(d) if i not in set(leaf_first)]
        diag = IterationDiagnostics(iteration=iteration, leaf=active[0], active=active)
        try:
            if len(active) > 1:
                diag.leaf = _find_iteration_leaf(field_, data, active, cfg, times, rng,
                                                 retrain, iteration, diag)
        except NumericalError as e:
            raise OrderingAbortedError(f"ordering aborted at iteration {iteration}: {e}",
                                       partial_order=leaf_first, cause=e) from e

        leaf_first.append(diag.leaf)
        if cfg.variant != 'greedy':
            field_.remove(diag.leaf)
        diag.seconds = time.perf_counter() - tick
        diagnostics.append(diag)
        logger.debug("iteration %d: leaf %d (votes %s)", iteration, diag.leaf, diag.votes)
        if on_iteration is not None:
            on_iteration(diag)

    return OrderingResult(reverse_to_root_order(leaf_first), leaf_first, diagnostics,
                          time.perf_counter() - started)


def _find_iteration_leaf(field_: ScoreField, data: Dataset, active: List[int], cfg: OrderConfig,
                         times: List[int], rng: np.random.Generator, retrain, iteration: int,
                         diag: IterationDiagnostics) -> int:
    if cfg.variant == 'greedy':
        if iteration == 0:
            local = field_
        else:
            local = ScoreField.from_net(retrain(data.columns(active)), residue=False, eps_div=cfg.eps_div)
        x = data.x[:, active]
    else:
        local = field_
        x = data.x

    shared = _sample_batch(x, cfg.k, rng)

    def batches() -> torch.Tensor:
        batch = _sample_batch(x, cfg.k, rng) if cfg.resample_per_vote else shared
        return field_.mask(batch) if cfg.use_mask and cfg.variant != 'greedy' else batch

    sums = np.zeros(len(active))
    local_votes = []
    for t in times:
        variances, excluded = local.leaf_variances(batches(), t)
        variances = variances.detach().numpy()
        local_votes.append(int(np.argmin(variances)))
        diag.times.append(int(t))
        diag.variances.append(variances)
        diag.excluded.append(excluded)
        sums += variances

    # local index i is active[i] for every variant: the field's active set or the retrained subset
    diag.votes = [active[i] for i in local_votes]
    return majority_vote(diag.votes, dict(zip(active, sums)))
