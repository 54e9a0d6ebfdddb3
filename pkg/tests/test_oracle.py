"""Tests for the closed-form scores used as oracles."""
import numpy as np
import pytest
from scipy import integrate

from conftest import chain, simulate
from diffan.exceptions import ValidationError
from diffan.models.dag import Dag
from diffan.services.oracle import (
    analytic_score_gaussian_anm,
    anm_log_density,
    linear_gaussian_precision,
    linear_gaussian_score,
    marginal_precision,
)
from diffan.services.scm import AnmRealization, LinearMechanism


def finite_difference_score(realization, x, h=1e-5):
    grad = np.zeros_like(x)
    for j in range(x.shape[1]):
        step = np.zeros(x.shape[1])
        step[j] = h
        grad[:, j] = (anm_log_density(realization, x + step) - anm_log_density(realization, x - step)) / (2 * h)
    return grad


class TestAnmScore:
    def test_roots_only(self):
        data, realization = simulate(Dag.empty(3), 10)
        assert np.allclose(analytic_score_gaussian_anm(realization, data.x), -data.x)

    def test_linear_pair_by_hand(self, rng):
        realization = AnmRealization(Dag.from_edges(2, [(0, 1)]), {1: LinearMechanism(np.array([2.0]))},
                                     np.ones(2), 'gaussian')
        x = rng.standard_normal((6, 2))
        a, b = x[:, 0], x[:, 1]
        score = analytic_score_gaussian_anm(realization, x)
        assert np.allclose(score[:, 0], -a + 2 * (b - 2 * a))
        assert np.allclose(score[:, 1], -(b - 2 * a))

    @pytest.mark.parametrize("seed", range(3))
    def test_gp_chain_matches_log_density_gradient(self, seed):
        data, realization = simulate(chain(3), 100, seed=seed, noise_scale_range=(0.5, 1.5))
        x = data.x[:20]
        assert np.allclose(analytic_score_gaussian_anm(realization, x), finite_difference_score(realization, x),
                           rtol=1e-5, atol=1e-6)

    def test_collider_matches_log_density_gradient(self):
        graph = Dag.from_edges(3, [(0, 2), (1, 2)])
        data, realization = simulate(graph, 100, seed=4)
        x = data.x[:20]
        assert np.allclose(analytic_score_gaussian_anm(realization, x), finite_difference_score(realization, x),
                           rtol=1e-5, atol=1e-6)

    def test_needs_gaussian_noise(self):
        data, realization = simulate(chain(2), 10)
        realization.noise_family = 'laplace'
        with pytest.raises(ValidationError):
            analytic_score_gaussian_anm(realization, data.x)


class TestLinearGaussian:
    def test_identity(self, rng):
        x = rng.standard_normal((4, 3))
        assert np.allclose(linear_gaussian_score(np.eye(3), x), -x)
        assert np.allclose(marginal_precision(np.eye(3), 1), np.eye(2))

    def test_schur_by_hand(self):
        assert np.allclose(marginal_precision(np.array([[2.0, -1.0], [-1.0, 1.0]]), 1), [[1.0]])

    def test_marginal_matches_covariance_block(self, rng):
        a = rng.standard_normal((5, 5))
        precision = a @ a.T + 5 * np.eye(5)
        covariance = np.linalg.inv(precision)
        keep = [0, 1, 3, 4]
        assert np.allclose(marginal_precision(precision, 2), np.linalg.inv(covariance[np.ix_(keep, keep)]))

    def test_marginal_density_by_quadrature(self):
        precision = np.array([[2.0, 0.6], [0.6, 1.5]])
        det = np.linalg.det(precision)
        m = marginal_precision(precision, 1)[0, 0]
        for x1 in (-1.0, 0.0, 0.7, 2.0):
            joint = lambda x2: np.sqrt(det) / (2 * np.pi) * np.exp(
                -0.5 * np.array([x1, x2]) @ precision @ np.array([x1, x2]))
            integral, _ = integrate.quad(joint, -np.inf, np.inf, epsabs=1e-12)
            assert integral == pytest.approx(np.sqrt(m / (2 * np.pi)) * np.exp(-0.5 * m * x1 ** 2), abs=1e-6)

    def test_precision_of_scm_matches_sample_covariance(self):
        data, realization = simulate(chain(3), 200000, seed=1, mechanism={'kind': 'linear'},
                                     noise_scale_range=(0.5, 1.5))
        covariance = np.linalg.inv(linear_gaussian_precision(realization))
        assert np.allclose(np.cov(data.x, rowvar=False), covariance, rtol=0.05, atol=0.05)

    def test_rejects_indefinite(self):
        with pytest.raises(ValidationError):
            linear_gaussian_score(np.array([[1.0, 2.0], [2.0, 1.0]]), np.zeros((1, 2)))

    def test_rejects_nonlinear_mechanism(self):
        _, realization = simulate(chain(2), 10)
        with pytest.raises(ValidationError):
            linear_gaussian_precision(realization)
