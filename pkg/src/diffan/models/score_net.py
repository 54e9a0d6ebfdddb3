"""MLP denoiser eps_theta(x_t, t) used as a score estimator."""
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Tuple

import torch
from torch import nn

from ..utils.validation import check_probability, require


@dataclass
class NetworkConfig:
    """
    Width and regularization of the score network.

    small and big default to max(128, 3d) and max(1024, 5d).
    """

    small: Optional[int] = None
    big: Optional[int] = None
    dropout: float = 0.2
    slope: float = 0.01

    def __post_init__(self):
        for name in ('small', 'big'):
            value = getattr(self, name)
            require(value is None or int(value) >= 1, f"{name} width must be positive, got {value}")
        check_probability('dropout', self.dropout, low_open=False)

    def widths(self, d: int) -> Tuple[int, int]:
        small = int(self.small) if self.small else max(128, 3 * d)
        big = int(self.big) if self.big else max(1024, 5 * d)
        return small, big

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "NetworkConfig":
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


class ScoreNet(nn.Module):
    """
    Five linear layers with LeakyReLU; LayerNorm after the first two and
    dropout after the first. Input is the d data columns with t / T appended.
    """

    def __init__(self, d: int, T: int = 100, small: int = 128, big: int = 1024,
                 dropout: float = 0.2, slope: float = 0.01):
        super().__init__()
        self.d = int(d)
        self.T = int(T)
        self.small = int(small)
        self.big = int(big)
        self.dropout = float(dropout)
        self.slope = float(slope)

        self.blocks = nn.ModuleList([
            nn.Sequential(nn.Linear(d + 1, small), nn.LeakyReLU(slope), nn.LayerNorm(small), nn.Dropout(dropout)),
            nn.Sequential(nn.Linear(small, big), nn.LeakyReLU(slope), nn.LayerNorm(big)),
            nn.Sequential(nn.Linear(big, big), nn.LeakyReLU(slope)),
            nn.Sequential(nn.Linear(big, big), nn.LeakyReLU(slope)),
            nn.Sequential(nn.Linear(big, d)),
        ])

    @classmethod
    def build(cls, d: int, T: int, config: Optional[NetworkConfig] = None) -> "ScoreNet":
        config = config or NetworkConfig()
        small, big = config.widths(d)
        return cls(d, T, small, big, config.dropout, config.slope)

    def architecture(self) -> Dict[str, Any]:
        return {'d': self.d, 'T': self.T, 'small': self.small, 'big': self.big,
                'dropout': self.dropout, 'slope': self.slope}

    def inputs(self, x: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        """Append the normalized time t / T as the last input column."""
        t = torch.as_tensor(t, dtype=x.dtype, device=x.device)
        t = t.expand(x.shape[:-1]) if t.dim() == 0 else t
        return torch.cat([x, (t / self.T).unsqueeze(-1)], dim=-1)

    def forward(self, x: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        h = self.inputs(x, t)
        for block in self.blocks:
            h = block(h)
        return h
