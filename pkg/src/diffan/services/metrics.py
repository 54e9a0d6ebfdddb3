"""Graph and ordering accuracy: SHD, SID and order divergence."""
import logging
from typing import Dict, FrozenSet, Optional

import networkx as nx
import numpy as np

from ..models.dag import Dag, Ordering
from ..utils.validation import require

logger = logging.getLogger(__name__)


def _same_size(est: Dag, truth: Dag) -> None:
    require(est.d == truth.d, f"graphs have {est.d} and {truth.d} nodes")


def shd(est: Dag, truth: Dag) -> int:
    """
    Structural Hamming distance.

    Every unordered pair whose edge differs counts once, so a reversed edge
    costs 1 and so does a missing or an extra one.
    """
    _same_size(est, truth)
    a = est.adj.astype(bool)
    b = truth.adj.astype(bool)
    differs = (a != b) | (a.T != b.T)
    return int(np.triu(differs, k=1).sum())


def order_divergence(order: Ordering, truth: Dag) -> int:
    """Number of true edges i -> j with i placed after j."""
    require(len(order) == truth.d, f"ordering has {len(order)} nodes, graph has {truth.d}")
    pos = order.positions()
    return sum(1 for i, j in truth.edges() if pos[i] > pos[j])


class _Sid:
    """Adjustment-set check of one estimated parent set against the true graph."""

    def __init__(self, truth: Dag):
        self.graph = truth.to_networkx()
        self._descendants: Dict[int, FrozenSet[int]] = {}

    def descendants(self, node: int) -> FrozenSet[int]:
        """Descendants of node, node included."""
        if node not in self._descendants:
            self._descendants[node] = frozenset(nx.descendants(self.graph, node)) | {node}
        return self._descendants[node]

    def _separated(self, graph: nx.DiGraph, i: int, j: int, z: FrozenSet[int]) -> bool:
        return nx.is_d_separator(graph, {i}, {j}, set(z))

    def wrong(self, i: int, j: int, parents: FrozenSet[int]) -> bool:
        """Whether adjusting for `parents` miscalculates the effect of doing i on j."""
        de_i = self.descendants(i)
        if j in parents:
            # a parent is claimed unaffected by i
            return j in de_i
        if j not in de_i:
            return not self._separated(self.graph, i, j, parents)

        on_causal_paths = {w for w in de_i if w != i and j in self.descendants(w)}
        forbidden = set().union(*(self.descendants(w) for w in on_causal_paths))
        if parents & forbidden:
            return True
        cut = self.graph.copy()
        cut.remove_edges_from([(i, w) for w in self.graph.successors(i) if w in on_causal_paths])
        return not self._separated(cut, i, j, parents)


def sid(est: Dag, truth: Dag) -> int:
    """
    Structural intervention distance.

    Counts ordered pairs (i, j), i != j, for which the estimated parents of i
    are not a valid adjustment set for the effect of i on j in the true graph.
    """
    _same_size(est, truth)
    checker = _Sid(truth)
    total = 0
    for i in range(truth.d):
        parents = frozenset(est.parents(i))
        total += sum(1 for j in range(truth.d) if j != i and checker.wrong(i, j, parents))
    return total


def evaluate(est: Dag, truth: Dag, order: Optional[Ordering] = None,
             runtime_seconds: Optional[float] = None) -> Dict[str, object]:
    """Metrics report {shd, sid, d_top, runtime_seconds}."""
    report: Dict[str, object] = {
        'shd': shd(est, truth),
        'sid': sid(est, truth),
        'd_top': order_divergence(order, truth) if order is not None else None,
        'runtime_seconds': None if runtime_seconds is None else float(runtime_seconds),
    }
    logger.debug("metrics: %s", report)
    return report
