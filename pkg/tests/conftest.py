"""Shared fixtures for the diffan test suite."""
import numpy as np
import pytest
import torch
import yaml

from diffan.models.dag import Dag
from diffan.services.scm import AnmSpec, sample_scm

TINY_CONFIG = {
    'graph': {'kind': 'er', 'd': 3, 'avg_edges_per_node': 1.0, 'seed': 0},
    'network': {'small': 8, 'big': 16, 'dropout': 0.0},
    'schedule': {'T': 10},
    'train': {'epochs_max': 3, 'batch_size': 32, 'early_stop_patience': 2},
    'ordering': {'k': 8, 'n_votes': 2},
    'bench': {'variants': ['masking', 'residue'], 'd': [3], 'n': [40], 'k': [8], 'seeds': [0], 'n_votes': [2]},
}


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def _seed_torch():
    torch.manual_seed(0)


@pytest.fixture
def tiny_config(tmp_path):
    """Run document with tiny networks and a handful of epochs."""
    path = tmp_path / "tiny.yaml"
    with open(path, 'w') as f:
        yaml.safe_dump(TINY_CONFIG, f)
    return path


def chain(d: int) -> Dag:
    return Dag.from_edges(d, [(i, i + 1) for i in range(d - 1)])


@pytest.fixture
def chain3():
    return chain(3)


def simulate(graph: Dag, n: int, seed: int = 0, mechanism=None, noise_scale_range=(1.0, 1.0)):
    spec = AnmSpec(graph=graph, mech_seed=seed, noise_family='gaussian', noise_scale_range=noise_scale_range,
                   mechanism=mechanism or {'kind': 'gp_rbf', 'bandwidth': 1.0})
    return sample_scm(spec, n, seed)
