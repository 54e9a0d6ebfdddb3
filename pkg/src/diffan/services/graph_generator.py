"""Random DAG generation: Erdos-Renyi and scale-free families."""
import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict

import networkx as nx
import numpy as np

from ..models.dag import Dag
from ..utils.validation import check_positive, require

logger = logging.getLogger(__name__)

GRAPH_KINDS = ('er', 'sf')


@dataclass
class GraphConfig:
    kind: str = 'er'
    d: int = 10
    avg_edges_per_node: float = 1.0
    seed: int = 0

    def __post_init__(self):
        require(self.kind in GRAPH_KINDS, f"graph kind must be one of {GRAPH_KINDS}, got '{self.kind}'")
        require(int(self.d) >= 1, f"d must be at least 1, got {self.d}")
        check_positive('avg_edges_per_node', self.avg_edges_per_node)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GraphConfig":
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _check_er_density(d: int, avg_edges_per_node: float) -> None:
    require(d >= 1, f"d must be at least 1, got {d}")
    check_positive('avg_edges_per_node', avg_edges_per_node)
    require(avg_edges_per_node * d <= d * (d - 1) / 2 or d == 1,
            f"{avg_edges_per_node} edges per node is infeasible for d={d} "
            f"(at most {(d - 1) / 2:g})")


def sample_er(d: int, avg_edges_per_node: float, seed: int) -> Dag:
    """
    Sample an Erdos-Renyi DAG with about avg_edges_per_node * d edges.

    An undirected G(d, p) graph with p = 2 * avg / (d - 1) is drawn and every
    edge is oriented along a uniformly random permutation of the nodes.
    """
    _check_er_density(d, avg_edges_per_node)
    if d == 1:
        return Dag.empty(1)

    rng = np.random.default_rng(seed)
    p = 2.0 * avg_edges_per_node / (d - 1)
    skeleton = nx.gnp_random_graph(d, p, seed=int(rng.integers(2**31 - 1)))
    rank = np.empty(d, dtype=int)
    rank[rng.permutation(d)] = np.arange(d)

    adj = np.zeros((d, d), dtype=np.int8)
    for u, v in skeleton.edges():
        if rank[u] < rank[v]:
            adj[u, v] = 1
        else:
            adj[v, u] = 1
    logger.debug("sampled ER graph d=%d p=%.4f with %d edges", d, p, int(adj.sum()))
    return Dag(adj)


def sample_sf(d: int, avg_edges_per_node: float, seed: int) -> Dag:
    """
    Sample a scale-free DAG by Barabasi-Albert preferential attachment.

    Each arriving node attaches m = round(avg_edges_per_node) edges; edges are
    oriented from the older node to the newer one.
    """
    require(d >= 1, f"d must be at least 1, got {d}")
    check_positive('avg_edges_per_node', avg_edges_per_node)
    if d == 1:
        return Dag.empty(1)

    # attachment yields m * (d - m) edges, feasible whenever m < d
    m = max(1, int(round(avg_edges_per_node)))
    require(m < d, f"{avg_edges_per_node} edges per node is infeasible for a scale-free graph "
                   f"with d={d} (attachment m={m} needs d > m)")
    undirected = nx.barabasi_albert_graph(d, m, seed=int(seed) % (2**32))

    adj = np.zeros((d, d), dtype=np.int8)
    for u, v in undirected.edges():
        adj[min(u, v), max(u, v)] = 1
    logger.debug("sampled SF graph d=%d m=%d with %d edges", d, m, int(adj.sum()))
    return Dag(adj)


def sample_graph(config: GraphConfig) -> Dag:
    sampler = sample_er if config.kind == 'er' else sample_sf
    return sampler(int(config.d), float(config.avg_edges_per_node), int(config.seed))
