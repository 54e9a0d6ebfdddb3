"""Run configuration: config/default.yaml merged with a user document and CLI overrides."""
import copy
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml

from .exceptions import ValidationError
from .models.dag import Dag
from .models.score_net import NetworkConfig
from .services.diffusion import ScheduleConfig, TrainConfig
from .services.graph_generator import GraphConfig
from .services.ordering import VARIANTS, OrderConfig
from .services.pruning import PruneConfig
from .services.scm import AnmSpec
from .utils.paths import get_project_paths
from .utils.validation import require

logger = logging.getLogger(__name__)

SECTIONS = ('graph', 'scm', 'network', 'schedule', 'train', 'ordering', 'pruning', 'bench')

# used when the package runs without its source tree
BUILTIN_DEFAULTS: Dict[str, Dict[str, Any]] = {
    'graph': GraphConfig().to_dict(),
    'scm': {'mech_seed': 0, 'noise_family': 'gaussian', 'noise_scale_range': [1.0, 1.0],
            'mechanism': {'kind': 'gp_rbf', 'bandwidth': 1.0}},
    'network': NetworkConfig().to_dict(),
    'schedule': ScheduleConfig().to_dict(),
    'train': TrainConfig().to_dict(),
    'ordering': OrderConfig().to_dict(),
    'pruning': PruneConfig().to_dict(),
    'bench': {'variants': ['masking'], 'd': [10], 'n': [1000], 'k': [64], 'seeds': [0, 1, 2, 3, 4],
              'n_votes': [10], 'early_stopping': [True]},
}


@dataclass
class BenchConfig:
    """Grid swept by the bench command; every field is a list of values."""

    variants: List[str] = field(default_factory=lambda: ['masking'])
    d: List[int] = field(default_factory=lambda: [10])
    n: List[int] = field(default_factory=lambda: [1000])
    k: List[int] = field(default_factory=lambda: [64])
    seeds: List[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    n_votes: List[int] = field(default_factory=lambda: [10])
    early_stopping: List[bool] = field(default_factory=lambda: [True])

    def __post_init__(self):
        for name in ('variants', 'd', 'n', 'k', 'seeds', 'n_votes', 'early_stopping'):
            value = getattr(self, name)
            if not isinstance(value, (list, tuple)):
                value = [value]
            require(len(value) >= 1, f"bench.{name} must list at least one value")
            setattr(self, name, list(value))
        unknown = sorted(set(self.variants) - set(VARIANTS))
        require(not unknown, f"bench.variants has unknown variants {unknown}")
        require(all(int(d) >= 1 for d in self.d), "bench.d values must be at least 1")
        require(all(int(n) >= 2 for n in self.n), "bench.n values must be at least 2")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "BenchConfig":
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        return {name: list(getattr(self, name)) for name in
                ('variants', 'd', 'n', 'k', 'seeds', 'n_votes', 'early_stopping')}


@dataclass
class RunConfig:
    graph: GraphConfig
    scm: Dict[str, Any]
    network: NetworkConfig
    schedule: ScheduleConfig
    train: TrainConfig
    ordering: OrderConfig
    pruning: PruneConfig
    bench: BenchConfig

    def anm_spec(self, graph: Dag) -> AnmSpec:
        return AnmSpec(graph=graph, **self.scm)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'graph': self.graph.to_dict(),
            'scm': copy.deepcopy(self.scm),
            'network': self.network.to_dict(),
            'schedule': self.schedule.to_dict(),
            'train': self.train.to_dict(),
            'ordering': self.ordering.to_dict(),
            'pruning': self.pruning.to_dict(),
            'bench': self.bench.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        unknown = sorted(set(data) - set(SECTIONS))
        require(not unknown, f"unknown config sections: {unknown}")
        sections = {}
        builders = {
            'graph': GraphConfig.from_dict,
            'network': NetworkConfig.from_dict,
            'schedule': ScheduleConfig.from_dict,
            'train': TrainConfig.from_dict,
            'ordering': OrderConfig.from_dict,
            'pruning': PruneConfig.from_dict,
            'bench': BenchConfig.from_dict,
        }
        for name in SECTIONS:
            values = data.get(name) or {}
            require(isinstance(values, dict), f"config section '{name}' must be a mapping")
            try:
                if name == 'scm':
                    # validated against a placeholder graph; the real graph arrives later
                    AnmSpec(graph=Dag.empty(1), **values)
                    sections[name] = dict(values)
                else:
                    sections[name] = builders[name](values)
            except TypeError as e:
                raise ValidationError(f"config section '{name}': {e}") from e
        return cls(**sections)


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Merge override into a copy of base; nested mappings merge, everything else replaces."""
    merged = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def read_document(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a YAML (or JSON) mapping."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"config file not found: {path}")
    try:
        with open(path, 'r') as f:
            document = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ValidationError(f"cannot parse {path}: {e}") from e
    document = document or {}
    require(isinstance(document, dict), f"{path} must contain a mapping of config sections")
    return document


def default_document() -> Dict[str, Any]:
    try:
        path = get_project_paths()['default_config']
    except FileNotFoundError:
        path = None
    if path is not None and path.exists():
        return deep_merge(BUILTIN_DEFAULTS, read_document(path))
    return copy.deepcopy(BUILTIN_DEFAULTS)


def load_run_config(path: Optional[Union[str, Path]] = None,
                    overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Resolve the run configuration.

    Args:
        path: User YAML/JSON document merged over the defaults
        overrides: Nested mapping applied last, e.g. from CLI flags

    Raises:
        ValidationError: on unknown sections or keys, or invalid values
    """
    document = default_document()
    if path is not None:
        document = deep_merge(document, read_document(path))
    if overrides:
        document = deep_merge(document, overrides)
    logger.debug("resolved config from %s", path or 'defaults')
    return RunConfig.from_dict(document)
