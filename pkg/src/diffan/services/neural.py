"""Evaluation, differentiation and checkpointing of the score network."""
import copy
import logging
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Sequence, Tuple, Union

import torch

from ..exceptions import NumericalError, ValidationError
from ..models.dataset import Standardizer
from ..models.score_net import ScoreNet

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = 'DIFFAN-CKPT'
CHECKPOINT_VERSION = 1

LossFn = Callable[[ScoreNet, Any], torch.Tensor]


def _as_tensor(values, net: ScoreNet) -> torch.Tensor:
    dtype = next(net.parameters()).dtype
    return torch.as_tensor(values, dtype=dtype)


def forward(net: ScoreNet, x_t, t, mode: str = 'eval', seed: Optional[int] = None) -> torch.Tensor:
    """
    Batched network output with activation checks.

    Args:
        net: Score network
        x_t: k x d noisy data
        t: k times in [0, T] (or one time for every row)
        mode: 'train' enables dropout, 'eval' disables it
        seed: Seed for the dropout masks in train mode

    Raises:
        NumericalError: naming the first layer whose activations are not finite
    """
    if mode not in ('train', 'eval'):
        raise ValidationError(f"mode must be 'train' or 'eval', got '{mode}'")
    x_t = _as_tensor(x_t, net)
    t = _as_tensor(t, net)
    if not torch.isfinite(x_t).all() or not torch.isfinite(t).all():
        raise NumericalError("non-finite network input (layer 0)")
    if ((t < 0) | (t > net.T)).any():
        raise ValidationError(f"times must lie in [0, {net.T}]")

    was_training = net.training
    net.train(mode == 'train')
    try:
        with torch.random.fork_rng(devices=[]):
            if seed is not None:
                torch.manual_seed(seed)
            h = net.inputs(x_t, t)
            for index, block in enumerate(net.blocks, start=1):
                h = block(h)
                if not torch.isfinite(h).all():
                    raise NumericalError(f"non-finite activation after layer {index}")
    finally:
        net.train(was_training)
    return h


def grad_weights(net: ScoreNet, batch: Any, loss_fn: LossFn) -> Dict[str, torch.Tensor]:
    """
    Gradient of a scalar loss with respect to every weight of the network.

    Args:
        net: Score network
        batch: Whatever loss_fn consumes
        loss_fn: Maps (net, batch) to a scalar tensor

    Returns:
        Mapping from parameter name to a gradient of the same shape
    """
    names, params = zip(*net.named_parameters())
    loss = loss_fn(net, batch)
    if loss.dim() != 0:
        raise ValidationError(f"loss must be a scalar, got shape {tuple(loss.shape)}")
    if not torch.isfinite(loss):
        raise NumericalError(f"non-finite loss {loss.item()}")
    grads = torch.autograd.grad(loss, params, allow_unused=True)
    return {
        name: (torch.zeros_like(param) if grad is None else grad)
        for name, param, grad in zip(names, params, grads)
    }


class Tape:
    """
    Autograd record of one forward pass with the data inputs as leaves.

    Samples do not interact in eval mode, so one reverse sweep of a summed
    output row yields that row's gradient for every sample at once.
    """

    def __init__(self, net: ScoreNet, x_t, t):
        self.inputs = _as_tensor(x_t, net).detach().clone().requires_grad_(True)
        self.outputs = net(self.inputs, _as_tensor(t, net))
        if not torch.isfinite(self.outputs).all():
            raise NumericalError(f"non-finite activation after layer {len(net.blocks)}")

    def reverse(self, row: int) -> torch.Tensor:
        """k x d gradient of output `row` with respect to the data inputs."""
        (grad,) = torch.autograd.grad(self.outputs[:, row].sum(), self.inputs, retain_graph=True)
        return grad


def input_jacobian(net: ScoreNet, x_t, t, rows: Optional[Sequence[int]] = None) -> torch.Tensor:
    """
    J[s, i, j] = d output_rows[i] / d input_j at sample s.

    Only the d data columns are differentiated; the time column never is.
    The sweep runs on a float64 eval-mode copy of the network.
    """
    rows = list(range(net.d)) if rows is None else [int(r) for r in rows]
    bad = [r for r in rows if not 0 <= r < net.d]
    if bad:
        raise ValidationError(f"output rows {bad} outside 0..{net.d - 1}")

    tape = Tape(as_float64(net), x_t, t)
    return torch.stack([tape.reverse(row) for row in rows], dim=1)


def as_float64(net: ScoreNet) -> ScoreNet:
    """Frozen double precision copy in eval mode, used on every Jacobian path."""
    frozen = copy.deepcopy(net).to(torch.float64).eval()
    for param in frozen.parameters():
        param.requires_grad_(False)
    return frozen


def save_checkpoint(path: Union[str, Path], net: ScoreNet, standardizer: Optional[Standardizer] = None,
                    extra: Optional[Dict[str, Any]] = None) -> Path:
    """
    Write the architecture header, weights and standardizer with torch.save.

    Layout: {'magic', 'version', 'architecture', 'state_dict', 'standardizer', 'extra'}.
    """
    path = Path(path)
    torch.save({
        'magic': CHECKPOINT_MAGIC,
        'version': CHECKPOINT_VERSION,
        'architecture': net.architecture(),
        'state_dict': {k: v.detach().cpu() for k, v in net.state_dict().items()},
        'standardizer': standardizer.to_dict() if standardizer else None,
        'extra': extra or {},
    }, path)
    logger.debug("saved checkpoint to %s", path)
    return path


def load_checkpoint(path: Union[str, Path]) -> Tuple[ScoreNet, Optional[Standardizer], Dict[str, Any]]:
    """Read a checkpoint written by save_checkpoint."""
    try:
        payload = torch.load(path, map_location='cpu', weights_only=True)
    except Exception as e:
        raise ValidationError(f"cannot read checkpoint {path}: {e}") from e
    if not isinstance(payload, dict) or payload.get('magic') != CHECKPOINT_MAGIC:
        raise ValidationError(f"{path} is not a diffan checkpoint")
    if payload.get('version') != CHECKPOINT_VERSION:
        raise ValidationError(f"{path} has checkpoint version {payload.get('version')}, "
                              f"expected {CHECKPOINT_VERSION}")

    net = ScoreNet(**payload['architecture'])
    state = payload['state_dict']
    net = net.to(next(iter(state.values())).dtype)
    net.load_state_dict(state)
    net.eval()
    standardizer = Standardizer.from_dict(payload['standardizer']) if payload['standardizer'] else None
    return net, standardizer, payload.get('extra', {})
