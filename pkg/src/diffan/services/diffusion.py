"""Linear noise schedule and denoising diffusion training of the score network."""
import copy
import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import torch

from ..exceptions import NumericalError, TrainingDivergedError
from ..models.dataset import Dataset, Standardizer
from ..models.score_net import NetworkConfig, ScoreNet
from ..utils.validation import check_positive, require
from .neural import forward

logger = logging.getLogger(__name__)


@dataclass
class ScheduleConfig:
    T: int = 100
    beta_min: float = 1e-4
    beta_max: float = 0.02

    def __post_init__(self):
        require(int(self.T) >= 1, f"T must be at least 1, got {self.T}")
        require(0 < self.beta_min <= self.beta_max < 1,
                f"need 0 < beta_min <= beta_max < 1, got [{self.beta_min}, {self.beta_max}]")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ScheduleConfig":
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class NoiseSchedule:
    """beta_t and alpha_bar_t = prod_{j<=t} (1 - beta_j) for t = 0..T."""

    T: int
    beta: np.ndarray
    alpha_bar: np.ndarray

    @classmethod
    def linear(cls, T: int = 100, beta_min: float = 1e-4, beta_max: float = 0.02) -> "NoiseSchedule":
        ScheduleConfig(T, beta_min, beta_max)
        beta = np.linspace(beta_min, beta_max, int(T) + 1)
        return cls(int(T), beta, np.cumprod(1.0 - beta))

    @classmethod
    def from_config(cls, config: ScheduleConfig) -> "NoiseSchedule":
        return cls.linear(config.T, config.beta_min, config.beta_max)

    def alpha_bar_at(self, t: torch.Tensor, dtype: torch.dtype = torch.float32) -> torch.Tensor:
        return torch.as_tensor(self.alpha_bar, dtype=dtype)[t.long()]


@dataclass
class TrainConfig:
    epochs_max: int = 2000
    batch_size: int = 256
    learning_rate: float = 1e-3
    early_stop_patience: int = 30
    val_fraction: float = 0.2
    early_stopping: bool = True
    seed: int = 0

    def __post_init__(self):
        for name in ('epochs_max', 'batch_size', 'learning_rate', 'early_stop_patience'):
            check_positive(name, getattr(self, name))
        require(0 < self.val_fraction <= 0.5, f"val_fraction must lie in (0, 0.5], got {self.val_fraction}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TrainConfig":
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float


@dataclass
class TrainResult:
    net: ScoreNet
    standardizer: Standardizer
    history: List[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    weights_epoch: int = 0
    stopped_early: bool = False

    @property
    def final_losses(self) -> Dict[str, Any]:
        """
        Last epoch's losses and the lowest validation loss seen.

        weights_epoch is the epoch whose weights the network holds: the best
        one with early stopping, otherwise the last.
        """
        last = self.history[-1]
        best = self.history[self.best_epoch]
        return {'train_loss': last.train_loss, 'val_loss': last.val_loss, 'best_val_loss': best.val_loss,
                'best_epoch': self.best_epoch, 'weights_epoch': self.weights_epoch}


def noisify(x0: torch.Tensor, t: torch.Tensor, eps: torch.Tensor, sched: NoiseSchedule) -> torch.Tensor:
    """x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps, row-wise in t."""
    x0 = torch.as_tensor(x0)
    alpha_bar = sched.alpha_bar_at(torch.as_tensor(t), dtype=x0.dtype).unsqueeze(-1)
    return alpha_bar.sqrt() * x0 + (1.0 - alpha_bar).sqrt() * torch.as_tensor(eps, dtype=x0.dtype)


def optimal_denoiser_floor(sched: NoiseSchedule) -> float:
    """
    Per-dimension validation loss of the best denoiser on standard normal data.

    With x0 ~ N(0, 1), E[eps | x_t] = sqrt(1 - alpha_bar_t) x_t and the residual
    variance is alpha_bar_t; t is uniform over 0..T.
    """
    return float(np.mean(sched.alpha_bar))


def _denoising_loss(net: ScoreNet, x0: torch.Tensor, t: torch.Tensor, eps: torch.Tensor,
                    sched: NoiseSchedule) -> torch.Tensor:
    prediction = net(noisify(x0, t, eps, sched), t)
    return ((prediction - eps) ** 2).sum(dim=-1).mean()


def _validation_loss(net: ScoreNet, x0: torch.Tensor, t: torch.Tensor, eps: torch.Tensor,
                     sched: NoiseSchedule) -> float:
    """Eval-mode loss; a non-finite activation raises NumericalError naming its layer."""
    with torch.no_grad():
        prediction = forward(net, noisify(x0, t, eps, sched), t, mode='eval')
    return ((prediction - eps) ** 2).sum(dim=-1).mean().item()


def train(net: ScoreNet, data: Dataset, sched: NoiseSchedule, cfg: TrainConfig,
          on_epoch: Optional[Callable[[EpochRecord], None]] = None) -> TrainResult:
    """
    Fit net to predict the injected noise, minimizing E|eps_theta(x_t, t) - eps|^2.

    Data are standardized per column first; t is uniform over 0..T. Training
    stops after epochs_max epochs or, with early stopping, once the validation
    loss has not improved for early_stop_patience epochs, in which case the
    best validation weights are restored.

    Raises:
        TrainingDivergedError: on a non-finite loss, carrying the last good weights
    """
    require(data.d == net.d, f"network expects {net.d} columns, data has {data.d}")
    require(data.n >= 2, f"training needs at least 2 rows, got {data.n}")

    standardizer = Standardizer.fit(data.x)
    dtype = next(net.parameters()).dtype
    z = torch.as_tensor(standardizer.transform(data.x), dtype=dtype)

    rng = np.random.default_rng(cfg.seed)
    perm = rng.permutation(data.n)
    n_val = min(data.n - 1, max(1, int(round(cfg.val_fraction * data.n))))
    val_x, train_x = z[perm[:n_val]], z[perm[n_val:]]
    batch_size = min(int(cfg.batch_size), train_x.shape[0])

    result = TrainResult(net=net, standardizer=standardizer)
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(cfg.seed)
        generator = torch.Generator().manual_seed(cfg.seed)
        val_t = torch.randint(0, sched.T + 1, (n_val,), generator=generator)
        val_eps = torch.randn(val_x.shape, generator=generator, dtype=dtype)

        optimizer = torch.optim.Adam(net.parameters(), lr=cfg.learning_rate)
        best_val = float('inf')
        best_state = copy.deepcopy(net.state_dict())
        stale = 0

        for epoch in range(int(cfg.epochs_max)):
            net.train()
            order = torch.randperm(train_x.shape[0], generator=generator)
            total, count = 0.0, 0
            for start in range(0, train_x.shape[0], batch_size):
                x0 = train_x[order[start:start + batch_size]]
                t = torch.randint(0, sched.T + 1, (x0.shape[0],), generator=generator)
                eps = torch.randn(x0.shape, generator=generator, dtype=dtype)
                loss = _denoising_loss(net, x0, t, eps, sched)
                if not torch.isfinite(loss):
                    net.load_state_dict(best_state)
                    raise TrainingDivergedError(
                        f"training loss became {loss.item()} at epoch {epoch}", checkpoint=best_state, epoch=epoch)
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
                total += loss.item() * x0.shape[0]
                count += x0.shape[0]

            try:
                val_loss = _validation_loss(net, val_x, val_t, val_eps, sched)
            except NumericalError as e:
                net.load_state_dict(best_state)
                raise TrainingDivergedError(f"validation failed at epoch {epoch}: {e}",
                                            checkpoint=best_state, epoch=epoch) from e
            record = EpochRecord(epoch, total / count, val_loss)
            result.history.append(record)
            if on_epoch is not None:
                on_epoch(record)

            if val_loss < best_val:
                best_val, stale = val_loss, 0
                best_state = copy.deepcopy(net.state_dict())
                result.best_epoch = epoch
            else:
                stale += 1
            if cfg.early_stopping and stale >= cfg.early_stop_patience:
                result.stopped_early = True
                logger.info("early stop at epoch %d (best %d, val %.4f)", epoch, result.best_epoch, best_val)
                break

    if cfg.early_stopping:
        net.load_state_dict(best_state)
        result.weights_epoch = result.best_epoch
    else:
        result.weights_epoch = len(result.history) - 1
    net.eval()
    return result


def train_score_net(data: Dataset, sched: NoiseSchedule, cfg: TrainConfig,
                    net_config: Optional[NetworkConfig] = None,
                    on_epoch: Optional[Callable[[EpochRecord], None]] = None) -> TrainResult:
    """Build a network seeded by cfg.seed and train it on data."""
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(cfg.seed)
        net = ScoreNet.build(data.d, sched.T, net_config)
    return train(net, data, sched, cfg, on_epoch)
