"""Closed-form scores for Gaussian additive noise models, used as test oracles."""
import logging
import math
from typing import List

import numpy as np
import torch
from torch.func import vmap

from ..models.dag import topological_sort
from ..utils.validation import require
from .scm import AnmRealization, LinearMechanism
from .score_field import ScoreFunction

logger = logging.getLogger(__name__)

FD_STEP = 1e-4


def _check_gaussian(realization: AnmRealization) -> None:
    require(realization.noise_family == 'gaussian',
            f"analytic scores need Gaussian noise, got '{realization.noise_family}'")


def _mechanism_gradient(mechanism, u: torch.Tensor, h: float = FD_STEP) -> torch.Tensor:
    """Gradient of one mechanism at the parent vector u; central differences unless linear."""
    if isinstance(mechanism, LinearMechanism):
        return torch.as_tensor(mechanism.weights, dtype=u.dtype)
    steps = h * torch.eye(u.shape[-1], dtype=u.dtype)
    return (mechanism.torch(u + steps) - mechanism.torch(u - steps)) / (2.0 * h)


def _residuals(realization: AnmRealization, x: torch.Tensor) -> torch.Tensor:
    """Per-sample noise x_i - f_i(parents), for a single d-vector x."""
    parts: List[torch.Tensor] = []
    for node in range(realization.graph.d):
        mechanism = realization.mechanisms.get(node)
        if mechanism is None:
            parts.append(x[node])
        else:
            parents = torch.as_tensor(realization.graph.parents(node), dtype=torch.long)
            parts.append(x[node] - mechanism.torch(x[parents]))
    return torch.stack(parts)


def anm_score_function(realization: AnmRealization) -> ScoreFunction:
    """
    Per-sample exact score of a Gaussian ANM; the time argument is ignored.

    d/dx_j log p(x) = -r_j / s_j^2 + sum over children i of (d f_i / d x_j) r_i / s_i^2,
    with r the noise residuals and s the noise scales.
    """
    _check_gaussian(realization)
    graph = realization.graph
    variances = torch.as_tensor(np.asarray(realization.noise_scales) ** 2, dtype=torch.float64)

    def score(x: torch.Tensor, t: torch.Tensor = None) -> torch.Tensor:
        weighted = _residuals(realization, x) / variances.to(x.dtype)
        terms = [[-weighted[j]] for j in range(graph.d)]
        for node, mechanism in realization.mechanisms.items():
            parents = graph.parents(node)
            grad = _mechanism_gradient(mechanism, x[torch.as_tensor(parents, dtype=torch.long)])
            for position, parent in enumerate(parents):
                terms[parent].append(grad[position] * weighted[node])
        return torch.stack([sum(parts) for parts in terms])

    return score


def analytic_score_gaussian_anm(realization: AnmRealization, x) -> np.ndarray:
    """k x d exact score of a Gaussian ANM at the rows of x."""
    x = torch.as_tensor(np.atleast_2d(x), dtype=torch.float64)
    require(x.shape[1] == realization.graph.d, f"x has {x.shape[1]} columns, graph has {realization.graph.d} nodes")
    score = anm_score_function(realization)
    return vmap(lambda row: score(row))(x).numpy()


def anm_log_density(realization: AnmRealization, x) -> np.ndarray:
    """Log joint density of a Gaussian ANM at the rows of x."""
    _check_gaussian(realization)
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    scales = np.asarray(realization.noise_scales)
    noise = realization.noise(x)
    return (-0.5 * (noise / scales) ** 2 - np.log(scales) - 0.5 * math.log(2 * math.pi)).sum(axis=1)


def linear_gaussian_precision(realization: AnmRealization) -> np.ndarray:
    """
    Precision (I - W) D^-1 (I - W)^T of a linear Gaussian SCM.

    W[j, i] is the weight of edge j -> i and D the diagonal of noise variances.
    """
    _check_gaussian(realization)
    d = realization.graph.d
    weights = np.zeros((d, d))
    for node in topological_sort(realization.graph):
        mechanism = realization.mechanisms.get(node)
        if mechanism is None:
            continue
        require(isinstance(mechanism, LinearMechanism), f"node {node} has a nonlinear mechanism")
        weights[realization.graph.parents(node), node] = mechanism.weights
    lower = np.eye(d) - weights
    return lower @ np.diag(1.0 / np.asarray(realization.noise_scales) ** 2) @ lower.T


def _check_spd(precision: np.ndarray) -> np.ndarray:
    precision = np.asarray(precision, dtype=np.float64)
    require(precision.ndim == 2 and precision.shape[0] == precision.shape[1], "precision must be square")
    require(np.allclose(precision, precision.T), "precision must be symmetric")
    require(np.all(np.linalg.eigvalsh(precision) > 0), "precision must be positive definite")
    return precision


def linear_gaussian_score(precision, x) -> np.ndarray:
    """Score -x P of a zero-mean Gaussian with precision P."""
    precision = _check_spd(precision)
    return -np.atleast_2d(np.asarray(x, dtype=np.float64)) @ precision


def linear_gaussian_score_function(precision) -> ScoreFunction:
    precision_t = torch.as_tensor(_check_spd(precision), dtype=torch.float64)

    def score(x: torch.Tensor, t: torch.Tensor = None) -> torch.Tensor:
        return -precision_t.to(x.dtype) @ x

    return score


def marginal_precision(precision, drop: int) -> np.ndarray:
    """Precision of the marginal without variable `drop`: the Schur complement of P[drop, drop]."""
    precision = _check_spd(precision)
    d = precision.shape[0]
    require(0 <= drop < d, f"drop index {drop} outside 0..{d - 1}")
    keep = [i for i in range(d) if i != drop]
    cross = precision[keep, drop]
    return precision[np.ix_(keep, keep)] - np.outer(cross, cross) / precision[drop, drop]
