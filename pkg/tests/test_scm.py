"""Tests for synthetic additive noise model data."""
import numpy as np
import pytest
import torch

from conftest import chain, simulate
from diffan.exceptions import NumericalError, ValidationError
from diffan.models.dag import Dag
from diffan.services.scm import (
    AnmSpec,
    GpMechanism,
    RffMechanism,
    cholesky_with_jitter,
    gp_draw,
    sample_dataset,
    sample_gp_mechanism,
    sample_noise,
)


class TestSampling:
    def test_single_node_gives_one_column(self):
        data, realization = simulate(Dag.empty(1), 50)
        assert data.x.shape == (50, 1)
        assert realization.mechanisms == {}

    def test_reproducible(self):
        spec = AnmSpec(graph=chain(4), mech_seed=3)
        a = sample_dataset(spec, 100, seed=5)
        b = sample_dataset(spec, 100, seed=5)
        assert np.array_equal(a.x, b.x)

    def test_noise_seed_changes_rows(self):
        spec = AnmSpec(graph=chain(3), mech_seed=3)
        a = sample_dataset(spec, 100, seed=1)
        b = sample_dataset(spec, 100, seed=2)
        assert not np.allclose(a.x, b.x)

    def test_realization_recovers_noise(self):
        data, realization = simulate(chain(3), 4000, mechanism={'kind': 'linear'}, noise_scale_range=(0.5, 2.0))
        noise = realization.noise(data.x)
        assert np.allclose(noise.std(axis=0), realization.noise_scales, rtol=0.1)
        assert np.all(np.abs(noise.mean(axis=0)) < 0.1)

    def test_linear_weights_in_range(self):
        _, realization = simulate(chain(3), 10, mechanism={'kind': 'linear', 'weight_range': [0.5, 2.0]})
        for mechanism in realization.mechanisms.values():
            assert np.all((np.abs(mechanism.weights) >= 0.5) & (np.abs(mechanism.weights) <= 2.0))

    def test_roots_have_no_mechanism(self):
        graph = Dag.from_edges(3, [(0, 2), (1, 2)])
        _, realization = simulate(graph, 20)
        assert sorted(realization.mechanisms) == [2]

    def test_spec_json(self, tmp_path):
        spec = AnmSpec(graph=chain(3), mech_seed=4, noise_family='laplace', noise_scale_range=(0.5, 1.0))
        spec.to_json(tmp_path / "spec.json")
        back = AnmSpec.from_json(tmp_path / "spec.json")
        assert back.graph.edges() == spec.graph.edges()
        assert back.noise_family == 'laplace'
        assert back.noise_scale_range == (0.5, 1.0)

    def test_mechanisms_are_not_linear(self):
        graph = chain(2)
        kept = 0
        for mech_seed in range(20):
            data, _ = simulate(graph, 1000, seed=mech_seed)
            design = np.column_stack([np.ones(data.n), data.x[:, 0]])
            coef, *_ = np.linalg.lstsq(design, data.x[:, 1], rcond=None)
            residual = data.x[:, 1] - design @ coef
            kept += residual.var() > 0.01 * data.x[:, 1].var()
        assert kept >= 19

    @pytest.mark.slow
    def test_noise_uncorrelated_with_parents(self):
        graph = Dag.from_edges(4, [(0, 1), (1, 2), (0, 3), (2, 3)])
        data, realization = simulate(graph, 10_000, seed=2)
        noise = realization.noise(data.x)
        for node in range(graph.d):
            for parent in graph.parents(node):
                assert abs(np.corrcoef(noise[:, node], data.x[:, parent])[0, 1]) < 0.05

    @pytest.mark.slow
    def test_gaussian_roots_are_standard(self):
        data, _ = simulate(Dag.empty(3), 10_000, seed=1)
        assert np.all(np.abs(data.x.mean(axis=0)) < 0.1)
        assert np.all(np.abs(data.x.var(axis=0) - 1.0) < 0.15)

    @pytest.mark.parametrize("changes", [
        {'noise_family': 'cauchy'},
        {'noise_scale_range': (0.0, 1.0)},
        {'mechanism': {'kind': 'mlp'}},
        {'mechanism': {'kind': 'gp_rbf', 'bandwidth': -1.0}},
    ])
    def test_spec_validation(self, changes):
        with pytest.raises(ValidationError):
            AnmSpec(graph=chain(2), **changes)


class TestNoise:
    @pytest.mark.parametrize("family", ['gaussian', 'exponential', 'laplace'])
    def test_zero_mean(self, family, rng):
        assert abs(sample_noise(family, 50000, rng).mean()) < 0.03

    def test_unknown_family(self, rng):
        with pytest.raises(ValueError):
            sample_noise('cauchy', 10, rng)


class TestGaussianProcess:
    def test_unit_prior_variance(self):
        point = np.zeros((1, 1))
        values = [gp_draw(point, 1.0, seed)[0] for seed in range(500)]
        assert np.var(values) == pytest.approx(1.0, abs=0.25)

    @pytest.mark.slow
    def test_covariance_matches_kernel(self):
        points = np.array([[0.0], [1.0]])
        draws = np.array([gp_draw(points, 1.0, seed) for seed in range(5000)])
        assert np.mean(draws[:, 0] * draws[:, 1]) == pytest.approx(np.exp(-0.5), abs=0.05)

    def test_duplicate_rows_share_a_value(self, rng):
        u = np.array([[0.0], [1.0], [0.0], [2.0], [1.0]])
        values = gp_draw(u, 1.0, seed=0)
        assert values[0] == values[2]
        assert values[1] == values[4]

    def test_interpolant_passes_through_draw(self, rng):
        u = rng.standard_normal((30, 2))
        mechanism = sample_gp_mechanism(u, 1.0, np.random.default_rng(0))
        assert isinstance(mechanism, GpMechanism)
        torch_values = mechanism.torch(torch.as_tensor(u)).numpy()
        assert np.allclose(torch_values, mechanism(u))

    def test_large_inputs_use_random_features(self, rng):
        u = rng.standard_normal((50, 1))
        mechanism = sample_gp_mechanism(u, 1.0, np.random.default_rng(0), exact_limit=10)
        assert isinstance(mechanism, RffMechanism)
        assert np.allclose(mechanism.torch(torch.as_tensor(u)).numpy(), mechanism(u))

    def test_random_feature_prior_variance(self):
        values = [sample_gp_mechanism(np.zeros((5, 1)), 1.0, np.random.default_rng(s), exact_limit=1)(np.zeros((1, 1)))[0]
                  for s in range(500)]
        assert np.var(values) == pytest.approx(1.0, abs=0.25)

    def test_jitter_handles_singular_kernel(self):
        chol, jitter = cholesky_with_jitter(np.ones((3, 3)))
        assert jitter >= 1e-6
        assert np.allclose(chol @ chol.T, np.ones((3, 3)) + jitter * np.eye(3))

    def test_jitter_gives_up(self):
        with pytest.raises(NumericalError):
            cholesky_with_jitter(-np.eye(2))
