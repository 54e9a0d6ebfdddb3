"""End-to-end discovery: train the score network, order the nodes, prune edges."""
import logging
import time
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Any, Callable, Dict, Optional

import pandas as pd

from ..models.dag import Dag
from ..models.dataset import Dataset, Standardizer
from ..models.score_net import ScoreNet
from ..utils.validation import require
from .diffusion import EpochRecord, NoiseSchedule, TrainResult, train_score_net
from .graph_generator import GraphConfig, sample_graph
from .metrics import evaluate
from .ordering import IterationDiagnostics, OrderConfig, OrderingResult, order
from .pruning import prune
from .scm import AnmSpec, sample_scm
from .score_field import ScoreField

if TYPE_CHECKING:
    from ..config import RunConfig

logger = logging.getLogger(__name__)


@dataclass
class DiscoveryResult:
    ordering: OrderingResult
    graph: Dag
    net: ScoreNet
    standardizer: Standardizer
    training: Optional[TrainResult] = None
    metrics: Optional[Dict[str, Any]] = None
    seconds: Dict[str, float] = field(default_factory=dict)


def fit_network(data: Dataset, run: "RunConfig",
                on_epoch: Optional[Callable[[EpochRecord], None]] = None,
                seed: Optional[int] = None) -> TrainResult:
    """Train a fresh network; seed replaces run.train.seed when given."""
    sched = NoiseSchedule.from_config(run.schedule)
    cfg = run.train if seed is None else replace(run.train, seed=int(seed))
    return train_score_net(data, sched, cfg, run.network, on_epoch)


def discover(data: Dataset, run: "RunConfig", truth: Optional[Dag] = None, *,
             net: Optional[ScoreNet] = None, standardizer: Optional[Standardizer] = None,
             ordering: Optional[OrderConfig] = None,
             on_epoch: Optional[Callable[[EpochRecord], None]] = None,
             on_iteration: Optional[Callable[[IterationDiagnostics], None]] = None) -> DiscoveryResult:
    """
    Run the full pipeline on raw data.

    Args:
        data: Raw observations
        run: Resolved run configuration
        truth: True graph; when given, the metrics report is filled in
        net: Already trained network, skips training
        standardizer: Standardization the given net was trained with
        ordering: Overrides run.ordering
    """
    require(net is None or standardizer is not None, "a pretrained network needs its standardizer")
    require(truth is None or truth.d == data.d, f"truth has {truth.d if truth else 0} nodes, data has {data.d}")
    cfg = ordering or run.ordering
    seconds: Dict[str, float] = {}
    training = None

    started = time.perf_counter()
    if net is None:
        training = fit_network(data, run, on_epoch)
        net, standardizer = training.net, training.standardizer
        seconds['train'] = time.perf_counter() - started
    require(net.d == data.d, f"network has {net.d} outputs, data has {data.d} columns")

    z = Dataset(standardizer.transform(data.x), list(data.labels))

    def retrain(subset: Dataset) -> ScoreNet:
        # subset columns are already standardized, so train's own standardization is the identity
        return fit_network(subset, run).net

    tick = time.perf_counter()
    ordering_result = order(net, z, cfg, retrain=retrain, on_iteration=on_iteration)
    seconds['order'] = time.perf_counter() - tick

    tick = time.perf_counter()
    graph = prune(data, ordering_result.ordering, run.pruning)
    seconds['prune'] = time.perf_counter() - tick
    seconds['total'] = time.perf_counter() - started

    metrics = None
    if truth is not None:
        metrics = evaluate(graph, truth, ordering_result.ordering, seconds['total'])
    logger.info("discovered %d edges over %d nodes in %.1fs", graph.n_edges, data.d, seconds['total'])
    return DiscoveryResult(ordering_result, graph, net, standardizer, training, metrics, seconds)


def two_variable_hessians(run: "RunConfig", seed: int, n: int = 1000, t: int = 0) -> pd.DataFrame:
    """
    Per-sample Hessian diagonal of a trained network on a cause -> effect pair.

    The pair is a GP mechanism with unit Gaussian noise. The effect column
    is the leaf, so its diagonal should be close to constant.
    """
    graph = Dag.from_edges(2, [(0, 1)], ['cause', 'effect'])
    spec = AnmSpec(graph=graph, mech_seed=seed, noise_family='gaussian', noise_scale_range=(1.0, 1.0),
                   mechanism={'kind': 'gp_rbf', 'bandwidth': float(run.scm.get('mechanism', {}).get('bandwidth', 1.0))})
    data, _ = sample_scm(spec, n, seed)
    training = fit_network(data, run, seed=seed)
    z = training.standardizer.transform(data.x)
    diagonal = ScoreField.from_net(training.net, residue=False).hessian_diag(z, t)
    return pd.DataFrame(diagonal.detach().numpy(), columns=list(graph.labels))


def simulate(run: "RunConfig", d: int, n: int, seed: int):
    """Graph and data for one benchmark cell; graph and mechanisms are seeded by seed."""
    graph = sample_graph(GraphConfig(run.graph.kind, int(d), run.graph.avg_edges_per_node, int(seed)))
    spec = AnmSpec(graph=graph, **{**run.scm, 'mech_seed': int(seed)})
    data, _ = sample_scm(spec, int(n), int(seed))
    return graph, data
