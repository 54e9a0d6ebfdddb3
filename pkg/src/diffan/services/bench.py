"""Benchmark sweeps over variants, sizes, batch sizes and seeds."""
import itertools
import logging
import time
from dataclasses import replace
from typing import TYPE_CHECKING, Callable, Dict, List, Optional, Tuple

import pandas as pd

from ..models.dataset import Dataset
from .metrics import order_divergence, shd
from .ordering import order
from .pipeline import fit_network, simulate
from .pruning import prune

if TYPE_CHECKING:
    from ..config import RunConfig

logger = logging.getLogger(__name__)

BENCH_COLUMNS = ['variant', 'd', 'n', 'k', 'seed', 'd_top', 'seconds',
                 'n_votes', 'early_stopping', 'shd', 'train_seconds']


def bench_cells(run: "RunConfig") -> List[Tuple]:
    grid = run.bench
    return list(itertools.product(grid.d, grid.n, grid.seeds, grid.early_stopping,
                                  grid.variants, grid.k, grid.n_votes))


def run_bench(run: "RunConfig", on_row: Optional[Callable[[Dict], None]] = None) -> pd.DataFrame:
    """
    Evaluate every cell of the bench grid.

    One network is trained per (d, n, seed, early_stopping) and shared by the
    variants, k and n_votes values of that cell. seconds is the ordering
    time only; training time is reported separately. The greedy variant's
    retraining is part of its ordering time.
    """
    rows = []
    trained: Dict[Tuple, Tuple] = {}
    for d, n, seed, early_stopping, variant, k, n_votes in bench_cells(run):
        key = (d, n, seed, early_stopping)
        if key not in trained:
            graph, data = simulate(run, d, n, seed)
            cell_run = replace(run, train=replace(run.train, early_stopping=bool(early_stopping)))
            tick = time.perf_counter()
            training = fit_network(data, cell_run, seed=seed)
            trained = {key: (graph, data, cell_run, training, time.perf_counter() - tick)}
        graph, data, cell_run, training, train_seconds = trained[key]

        z = Dataset(training.standardizer.transform(data.x), list(data.labels))
        cfg = replace(run.ordering, variant=variant, k=int(k), n_votes=int(n_votes), seed=int(seed))
        tick = time.perf_counter()
        result = order(training.net, z, cfg, retrain=lambda subset: fit_network(subset, cell_run, seed=seed).net)
        seconds = time.perf_counter() - tick
        estimate = prune(data, result.ordering, run.pruning)

        row = {
            'variant': variant, 'd': int(d), 'n': int(n), 'k': int(k), 'seed': int(seed),
            'd_top': order_divergence(result.ordering, graph), 'seconds': seconds,
            'n_votes': int(n_votes), 'early_stopping': bool(early_stopping),
            'shd': shd(estimate, graph), 'train_seconds': train_seconds,
        }
        logger.info("bench %s d=%d n=%d k=%d seed=%d: d_top=%d", variant, d, n, k, seed, row['d_top'])
        rows.append(row)
        if on_row is not None:
            on_row(row)
    return pd.DataFrame(rows, columns=BENCH_COLUMNS)
