"""
Synthetic additive noise model (ANM) data.

Every non-root column is x_i = f_i(parents) + e_i, with f_i drawn from a
Gaussian process prior with an RBF kernel (or a linear map) and e_i drawn
i.i.d. from a zero-mean noise family scaled per node.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import torch
from scipy.linalg import LinAlgError, cholesky, solve_triangular
from scipy.spatial.distance import cdist

from ..exceptions import NumericalError
from ..models.dag import Dag, topological_sort
from ..models.dataset import Dataset
from ..utils.validation import require

logger = logging.getLogger(__name__)

NOISE_FAMILIES = ('gaussian', 'exponential', 'laplace')
MECHANISM_KINDS = ('gp_rbf', 'linear')

EXACT_GP_LIMIT = 3000
RFF_FEATURES = 256
JITTER_START = 1e-6
JITTER_MAX = 1e-3


@dataclass
class AnmSpec:
    """Graph, mechanism family and noise family of a synthetic ANM."""

    graph: Dag
    mech_seed: int = 0
    noise_family: str = 'gaussian'
    noise_scale_range: Tuple[float, float] = (1.0, 1.0)
    mechanism: Dict[str, Any] = field(default_factory=lambda: {'kind': 'gp_rbf', 'bandwidth': 1.0})

    def __post_init__(self):
        require(self.noise_family in NOISE_FAMILIES,
                f"noise_family must be one of {NOISE_FAMILIES}, got '{self.noise_family}'")
        lo, hi = (float(v) for v in self.noise_scale_range)
        require(0 < lo <= hi, f"noise_scale_range must satisfy 0 < lo <= hi, got [{lo}, {hi}]")
        self.noise_scale_range = (lo, hi)
        mechanism = dict(self.mechanism)
        kind = mechanism.setdefault('kind', 'gp_rbf')
        require(kind in MECHANISM_KINDS, f"mechanism kind must be one of {MECHANISM_KINDS}, got '{kind}'")
        if kind == 'gp_rbf':
            mechanism.setdefault('bandwidth', 1.0)
            require(float(mechanism['bandwidth']) > 0, "GP bandwidth must be positive")
        else:
            mechanism.setdefault('weight_range', [0.5, 2.0])
            w_lo, w_hi = mechanism['weight_range']
            require(0 <= w_lo <= w_hi, f"weight_range must satisfy 0 <= lo <= hi, got {mechanism['weight_range']}")
        self.mechanism = mechanism

    def to_dict(self) -> Dict[str, Any]:
        return {
            'graph': {'labels': list(self.graph.labels), 'edges': [list(e) for e in self.graph.edges()]},
            'mech_seed': int(self.mech_seed),
            'noise_family': self.noise_family,
            'noise_scale_range': list(self.noise_scale_range),
            'mechanism': dict(self.mechanism),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], graph: Optional[Dag] = None) -> "AnmSpec":
        data = dict(data)
        graph_data = data.pop('graph', None)
        if graph is None:
            require(graph_data is not None, "AnmSpec needs a graph")
            labels = graph_data['labels']
            graph = Dag.from_edges(len(labels), [tuple(e) for e in graph_data['edges']], labels)
        return cls(graph=graph, **data)

    def to_json(self, path: Union[str, Path]) -> None:
        with open(path, 'w') as f:
            json.dump(self.to_dict(), f, indent=2)

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> "AnmSpec":
        with open(path, 'r') as f:
            return cls.from_dict(json.load(f))


class Mechanism:
    """A function of the parent values, evaluable on numpy and torch inputs."""

    def __call__(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def torch(self, u: torch.Tensor) -> torch.Tensor:
        """Evaluate on a tensor whose last axis holds the parent values."""
        raise NotImplementedError


class GpMechanism(Mechanism):
    """Kernel interpolant through a GP draw: f(u) = k(u, centers) @ alpha."""

    def __init__(self, centers: np.ndarray, alpha: np.ndarray, bandwidth: float):
        self.centers = centers
        self.alpha = alpha
        self.bandwidth = float(bandwidth)
        self._centers_t = torch.as_tensor(centers, dtype=torch.float64)
        self._alpha_t = torch.as_tensor(alpha, dtype=torch.float64)

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return rbf_kernel(np.atleast_2d(u), self.centers, self.bandwidth) @ self.alpha

    def torch(self, u: torch.Tensor) -> torch.Tensor:
        sq = ((u.unsqueeze(-2) - self._centers_t.to(u.dtype)) ** 2).sum(-1)
        return torch.exp(-sq / (2 * self.bandwidth ** 2)) @ self._alpha_t.to(u.dtype)


class RffMechanism(Mechanism):
    """Random Fourier feature draw: f(u) = sqrt(2/D) * sum_k a_k cos(w_k . u / bw + b_k)."""

    def __init__(self, omega: np.ndarray, phase: np.ndarray, amplitude: np.ndarray, bandwidth: float):
        self.omega = omega
        self.phase = phase
        self.amplitude = amplitude
        self.bandwidth = float(bandwidth)
        self._norm = np.sqrt(2.0 / omega.shape[0])

    def __call__(self, u: np.ndarray) -> np.ndarray:
        features = np.cos(np.atleast_2d(u) @ self.omega.T / self.bandwidth + self.phase)
        return self._norm * features @ self.amplitude

    def torch(self, u: torch.Tensor) -> torch.Tensor:
        omega = torch.as_tensor(self.omega, dtype=u.dtype)
        phase = torch.as_tensor(self.phase, dtype=u.dtype)
        amplitude = torch.as_tensor(self.amplitude, dtype=u.dtype)
        return self._norm * torch.cos(u @ omega.T / self.bandwidth + phase) @ amplitude


class LinearMechanism(Mechanism):
    def __init__(self, weights: np.ndarray):
        self.weights = weights

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return np.atleast_2d(u) @ self.weights

    def torch(self, u: torch.Tensor) -> torch.Tensor:
        return u @ torch.as_tensor(self.weights, dtype=u.dtype)


def rbf_kernel(a: np.ndarray, b: np.ndarray, bandwidth: float) -> np.ndarray:
    """k(u, v) = exp(-|u - v|^2 / (2 bandwidth^2))."""
    return np.exp(-cdist(a, b, 'sqeuclidean') / (2.0 * bandwidth ** 2))


def cholesky_with_jitter(k: np.ndarray) -> Tuple[np.ndarray, float]:
    """
    Lower Cholesky factor of k + jitter * I.

    Jitter starts at 1e-6 and doubles up to 1e-3.

    Raises:
        NumericalError: if no jitter in that range makes k positive definite
    """
    jitter = JITTER_START
    eye = np.eye(k.shape[0])
    while jitter <= JITTER_MAX:
        try:
            return cholesky(k + jitter * eye, lower=True), jitter
        except LinAlgError:
            logger.warning("GP kernel not positive definite with jitter %.1e, doubling", jitter)
            jitter *= 2
    raise NumericalError(f"GP kernel matrix of size {k.shape[0]} is not positive definite after jitter {JITTER_MAX:g}")


def sample_gp_mechanism(parent_values: np.ndarray, bandwidth: float, rng: np.random.Generator,
                        exact_limit: int = EXACT_GP_LIMIT, n_features: int = RFF_FEATURES) -> Mechanism:
    """
    Draw a function from the GP prior, jointly Gaussian at the given inputs.

    Up to exact_limit rows the draw is exact (Cholesky at the distinct rows);
    larger inputs use a random Fourier feature approximation.
    """
    parent_values = np.atleast_2d(np.asarray(parent_values, dtype=np.float64))
    require(parent_values.shape[0] >= 1 and parent_values.shape[1] >= 1,
            f"GP draw needs at least one row and one parent, got shape {parent_values.shape}")
    p = parent_values.shape[1]

    if parent_values.shape[0] > exact_limit:
        return RffMechanism(
            omega=rng.standard_normal((n_features, p)),
            phase=rng.uniform(0.0, 2.0 * np.pi, n_features),
            amplitude=rng.standard_normal(n_features),
            bandwidth=bandwidth,
        )

    # duplicated rows get one draw so they map to identical outputs
    centers = np.unique(parent_values, axis=0)
    chol, _ = cholesky_with_jitter(rbf_kernel(centers, centers, bandwidth))
    z = rng.standard_normal(centers.shape[0])
    alpha = solve_triangular(chol.T, z, lower=False)
    if not np.all(np.isfinite(alpha)):
        raise NumericalError("GP draw produced non-finite interpolation weights")
    return GpMechanism(centers, alpha, bandwidth)


def gp_draw(parent_values: np.ndarray, bandwidth: float, seed: int) -> np.ndarray:
    """Function values of one GP prior draw at the rows of parent_values."""
    rng = np.random.default_rng(seed)
    mechanism = sample_gp_mechanism(parent_values, bandwidth, rng)
    return mechanism(np.atleast_2d(parent_values))


def sample_noise(family: str, size: int, rng: np.random.Generator) -> np.ndarray:
    """Zero-mean unit-scale noise; exponential noise is centered."""
    if family == 'gaussian':
        return rng.standard_normal(size)
    if family == 'exponential':
        return rng.exponential(1.0, size) - 1.0
    if family == 'laplace':
        return rng.laplace(0.0, 1.0, size)
    raise ValueError(f"Unknown noise family: {family}")


@dataclass
class AnmRealization:
    """The mechanisms and noise scales that produced one dataset."""

    graph: Dag
    mechanisms: Dict[int, Mechanism]
    noise_scales: np.ndarray
    noise_family: str

    def mechanism_values(self, x: np.ndarray) -> np.ndarray:
        """f_i(parents of i) for every node; zero for roots."""
        values = np.zeros_like(x, dtype=np.float64)
        for node, mechanism in self.mechanisms.items():
            values[:, node] = mechanism(x[:, self.graph.parents(node)])
        return values

    def noise(self, x: np.ndarray) -> np.ndarray:
        return x - self.mechanism_values(x)

    def to_dict(self) -> Dict[str, Any]:
        return {'noise_family': self.noise_family, 'noise_scales': self.noise_scales.tolist()}


def sample_scm(spec: AnmSpec, n: int, seed: int) -> Tuple[Dataset, AnmRealization]:
    """
    Generate n samples and the realization of spec's mechanisms.

    Mechanism parameters and noise scales depend on (mech_seed, node); noise
    draws depend on (seed, node). Columns are filled in topological order.
    """
    require(int(n) >= 1, f"n must be at least 1, got {n}")
    graph = spec.graph
    lo, hi = spec.noise_scale_range
    kind = spec.mechanism['kind']

    x = np.zeros((int(n), graph.d), dtype=np.float64)
    mechanisms: Dict[int, Mechanism] = {}
    scales = np.zeros(graph.d)

    for node in topological_sort(graph):
        mech_rng = np.random.default_rng([int(spec.mech_seed), node])
        noise_rng = np.random.default_rng([int(seed), node])
        scales[node] = mech_rng.uniform(lo, hi)
        parents = graph.parents(node)

        column = scales[node] * sample_noise(spec.noise_family, int(n), noise_rng)
        if parents:
            if kind == 'gp_rbf':
                mechanism = sample_gp_mechanism(x[:, parents], float(spec.mechanism['bandwidth']), mech_rng)
            else:
                w_lo, w_hi = spec.mechanism['weight_range']
                signs = mech_rng.choice([-1.0, 1.0], len(parents))
                mechanism = LinearMechanism(signs * mech_rng.uniform(w_lo, w_hi, len(parents)))
            mechanisms[node] = mechanism
            column = column + mechanism(x[:, parents])
        x[:, node] = column

    if not np.all(np.isfinite(x)):
        raise NumericalError("generated data contains non-finite values")
    logger.debug("sampled %d rows from a %d-node %s ANM", n, graph.d, kind)
    return Dataset(x, list(graph.labels)), AnmRealization(graph, mechanisms, scales, spec.noise_family)


def sample_dataset(spec: AnmSpec, n: int, seed: int) -> Dataset:
    dataset, _ = sample_scm(spec, n, seed)
    return dataset
