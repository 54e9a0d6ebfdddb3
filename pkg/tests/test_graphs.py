"""Tests for DAG value types and random graph generation."""
import networkx as nx
import numpy as np
import pytest

from conftest import chain
from diffan.exceptions import ValidationError
from diffan.models.dag import Dag, Ordering, is_valid_order, topological_sort
from diffan.services.graph_generator import GraphConfig, sample_er, sample_graph, sample_sf


class TestDag:
    def test_rejects_cycle(self):
        with pytest.raises(ValidationError, match="cycle"):
            Dag(np.array([[0, 1], [1, 0]]))

    def test_rejects_self_loop(self):
        with pytest.raises(ValidationError, match="self-loop"):
            Dag(np.array([[1, 0], [0, 0]]))

    def test_rejects_non_binary(self):
        with pytest.raises(ValidationError):
            Dag(np.array([[0, 2], [0, 0]]))

    def test_adjacency_is_read_only(self):
        g = chain(3)
        with pytest.raises(ValueError):
            g.adj[0, 2] = 1

    def test_parents_children_leaves(self):
        g = Dag.from_edges(4, [(0, 2), (1, 2), (2, 3)])
        assert g.parents(2) == [0, 1]
        assert g.children(2) == [3]
        assert g.leaves() == [3]
        assert g.n_edges == 3

    def test_csv_keeps_labels(self, tmp_path):
        g = Dag.from_edges(3, [(0, 1), (0, 2)], ['a', 'b', 'c'])
        g.to_csv(tmp_path / "g.csv")
        back = Dag.from_csv(tmp_path / "g.csv")
        assert back.labels == ['a', 'b', 'c']
        assert np.array_equal(back.adj, g.adj)

    def test_duplicate_labels_rejected(self):
        with pytest.raises(ValidationError):
            Dag.empty(2, ['x', 'x'])


class TestOrdering:
    def test_rejects_non_permutation(self):
        with pytest.raises(ValidationError):
            Ordering((0, 0, 1))

    def test_positions(self):
        assert list(Ordering((2, 0, 1)).positions()) == [1, 2, 0]

    def test_labels(self):
        labels = ['a', 'b', 'c']
        order = Ordering.from_labels(['c', 'a', 'b'], labels)
        assert order.pi == (2, 0, 1)
        assert order.to_labels(labels) == ['c', 'a', 'b']

    def test_unknown_label(self):
        with pytest.raises(ValidationError, match="unknown"):
            Ordering.from_labels(['z'], ['a'])


class TestTopologicalSort:
    def test_chain(self):
        assert topological_sort(chain(4)).pi == (0, 1, 2, 3)

    def test_ties_broken_by_index(self):
        g = Dag.from_edges(4, [(3, 0), (2, 1)])
        assert topological_sort(g).pi == (2, 1, 3, 0)

    def test_diamond_puts_source_first_and_sink_last(self):
        g = Dag.from_edges(4, [(0, 1), (0, 2), (1, 3), (2, 3)])
        order = topological_sort(g)
        assert order.pi[0] == 0
        assert order.pi[-1] == 3
        assert is_valid_order(order, g)

    def test_valid_order(self):
        g = Dag.from_edges(3, [(2, 1), (1, 0)])
        assert is_valid_order(topological_sort(g), g)
        assert not is_valid_order(Ordering((0, 1, 2)), g)


class TestGraphGenerator:
    def test_er_edge_count_matches_density(self):
        counts = [sample_er(20, 1.0, seed).n_edges for seed in range(200)]
        assert 17 <= np.mean(counts) <= 23

    def test_er_is_acyclic_and_seeded(self):
        a = sample_er(15, 2.0, 7)
        b = sample_er(15, 2.0, 7)
        assert nx.is_directed_acyclic_graph(a.to_networkx())
        assert np.array_equal(a.adj, b.adj)

    def test_sf_tree_for_one_edge_per_node(self):
        g = sample_sf(20, 1.0, 3)
        assert g.n_edges == 19
        assert nx.is_directed_acyclic_graph(g.to_networkx())

    def test_sf_two_nodes_single_edge(self):
        g = sample_sf(2, 1.0, 5)
        assert g.edges() == [(0, 1)]

    def test_sf_infeasible_attachment(self):
        with pytest.raises(ValidationError, match="infeasible"):
            sample_sf(2, 2.0, 0)

    def test_sf_degree_tail_heavier_than_er(self):
        def max_degree(g):
            return (g.adj.sum(axis=0) + g.adj.sum(axis=1)).max()

        sf = [max_degree(sample_sf(50, 1.0, seed)) for seed in range(20)]
        er = [max_degree(sample_er(50, 1.0, seed)) for seed in range(20)]
        assert np.mean(sf) > np.mean(er)

    def test_sf_has_hubs(self):
        g = sample_sf(50, 2.0, 0)
        degrees = g.adj.sum(axis=0) + g.adj.sum(axis=1)
        assert degrees.max() >= 2 * np.median(degrees)

    def test_single_node(self):
        assert sample_graph(GraphConfig('er', 1, 1.0, 0)).d == 1

    def test_infeasible_density(self):
        with pytest.raises(ValidationError, match="infeasible"):
            sample_er(3, 5.0, 0)

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            GraphConfig(kind='ws')
