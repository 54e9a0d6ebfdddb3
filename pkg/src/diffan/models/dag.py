"""DAG and topological ordering value types."""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import networkx as nx
import numpy as np
import pandas as pd

from ..exceptions import ValidationError
from ..utils.validation import check_permutation, require, unique_labels


def default_labels(d: int) -> List[str]:
    return [f"X{i}" for i in range(d)]


@dataclass(frozen=True)
class Ordering:
    """Permutation of node indices listed root-to-leaf."""

    pi: tuple

    def __post_init__(self):
        object.__setattr__(self, 'pi', tuple(int(i) for i in self.pi))
        check_permutation(self.pi, len(self.pi))

    def __len__(self) -> int:
        return len(self.pi)

    def __iter__(self):
        return iter(self.pi)

    def positions(self) -> np.ndarray:
        """Position of every node in the ordering, indexed by node."""
        pos = np.empty(len(self.pi), dtype=int)
        pos[list(self.pi)] = np.arange(len(self.pi))
        return pos

    def to_labels(self, labels: Sequence[str]) -> List[str]:
        return [labels[i] for i in self.pi]

    @classmethod
    def from_labels(cls, names: Sequence[str], labels: Sequence[str]) -> "Ordering":
        index = {label: i for i, label in enumerate(labels)}
        missing = [name for name in names if name not in index]
        require(not missing, f"ordering names unknown labels: {missing}")
        return cls(tuple(index[name] for name in names))


@dataclass(frozen=True)
class Dag:
    """
    Directed acyclic graph stored as a dense binary adjacency matrix.

    adj[i, j] == 1 means an edge i -> j.
    """

    adj: np.ndarray
    labels: List[str] = field(default_factory=list)

    def __post_init__(self):
        adj = np.asarray(self.adj)
        require(adj.ndim == 2 and adj.shape[0] == adj.shape[1],
                f"adjacency must be square, got shape {adj.shape}")
        require(np.isin(adj, (0, 1)).all(), "adjacency entries must be 0 or 1")
        adj = adj.astype(np.int8)
        require(not np.any(np.diag(adj)), "adjacency has a self-loop")
        adj.setflags(write=False)
        object.__setattr__(self, 'adj', adj)
        labels = list(self.labels) if self.labels else default_labels(adj.shape[0])
        require(len(labels) == adj.shape[0],
                f"{len(labels)} labels given for {adj.shape[0]} nodes")
        object.__setattr__(self, 'labels', unique_labels(labels))
        if not nx.is_directed_acyclic_graph(self.to_networkx()):
            raise ValidationError("adjacency matrix contains a directed cycle")

    @property
    def d(self) -> int:
        return self.adj.shape[0]

    @property
    def n_edges(self) -> int:
        return int(self.adj.sum())

    def edges(self) -> List[tuple]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.adj))]

    def parents(self, node: int) -> List[int]:
        return [int(i) for i in np.flatnonzero(self.adj[:, node])]

    def children(self, node: int) -> List[int]:
        return [int(j) for j in np.flatnonzero(self.adj[node])]

    def leaves(self) -> List[int]:
        return [i for i in range(self.d) if not self.adj[i].any()]

    def to_networkx(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.adj.shape[0]))
        graph.add_edges_from(zip(*np.nonzero(self.adj)))
        return graph

    @classmethod
    def empty(cls, d: int, labels: Optional[List[str]] = None) -> "Dag":
        return cls(np.zeros((d, d), dtype=np.int8), labels or [])

    @classmethod
    def from_edges(cls, d: int, edges: Iterable[tuple], labels: Optional[List[str]] = None) -> "Dag":
        adj = np.zeros((d, d), dtype=np.int8)
        for i, j in edges:
            adj[i, j] = 1
        return cls(adj, labels or [])

    def to_csv(self, path: Union[str, Path]) -> None:
        """Write d rows of comma separated 0/1 integers under a header of labels."""
        pd.DataFrame(self.adj.astype(int), columns=self.labels).to_csv(path, index=False)

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "Dag":
        frame = pd.read_csv(path)
        require(frame.shape[0] == frame.shape[1],
                f"{path}: adjacency CSV must have d rows under a d-label header")
        try:
            adj = frame.to_numpy(dtype=np.int64)
        except ValueError as e:
            raise ValidationError(f"{path}: adjacency entries must be integers ({e})") from e
        return cls(adj, list(frame.columns))


def topological_sort(g: Dag) -> Ordering:
    """
    Return a root-first ordering in which every edge i -> j has i before j.

    Ties are broken by the smallest node index, so the result is deterministic.
    """
    try:
        pi = list(nx.lexicographical_topological_sort(g.to_networkx()))
    except nx.NetworkXUnfeasible as e:
        raise ValidationError("graph contains a cycle; no topological order exists") from e
    return Ordering(tuple(pi))


def is_valid_order(order: Ordering, g: Dag) -> bool:
    pos = order.positions()
    return all(pos[i] < pos[j] for i, j in g.edges())
