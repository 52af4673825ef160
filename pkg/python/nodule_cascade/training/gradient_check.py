import dataclasses
from typing import Callable, List, Tuple

import numpy as np
import torch

from ..models import CascadeNet, checkpoint_from_model, model_from_checkpoint
from ..utils import named_rng

__all__ = ['GradientCheckResult', 'gradient_check']

_ABS_FLOOR = 1e-8


@dataclasses.dataclass(frozen=True)
class GradientCheckResult:
    rel_errors: List[float]
    """Relative error of every accepted parameter"""

    n_kinks: int
    """Draws rejected because the finite difference straddled a non-differentiable point"""

    @property
    def n_checked(self) -> int:
        return len(self.rel_errors)

    @property
    def max_rel_error(self) -> float:
        return max(self.rel_errors) if self.rel_errors else 0.


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), _ABS_FLOOR)


def gradient_check(model: CascadeNet,
                   loss_fn: Callable[[torch.Tensor, torch.Tensor], torch.Tensor],
                   batch: Tuple[torch.Tensor, torch.Tensor],
                   n_params: int = 32,
                   step: float = 1e-3,
                   seed: int = 0,
                   kink_tolerance: float = 0.5e-4) -> GradientCheckResult:
    """
    Compare autograd gradients with central finite differences on a random parameter subset.

    The check runs on a 64-bit copy of the model in inference mode. A draw whose central differences at step and
    step / 2 disagree by more than kink_tolerance (relative) crosses a relu or max-pool kink; it is skipped, counted
    and redrawn, up to 10 * n_params draws.

    :param model: network to check, left untouched
    :param loss_fn: loss of (outputs, targets)
    :param batch: (inputs, targets)
    :param n_params: number of parameters to accept
    :param step: finite difference step
    :param seed: seed of the parameter draw
    :param kink_tolerance: relative disagreement between the two steps that marks a kink
    :return: GradientCheckResult
    """
    net = model_from_checkpoint(checkpoint_from_model(model)).double().eval()
    x, t = batch[0].double(), batch[1].double()
    params = list(net.parameters())
    sizes = np.array([p.numel() for p in params])
    bounds = np.cumsum(sizes)

    net.zero_grad()
    loss_fn(net(x), t).backward()
    grads = [p.grad.detach().clone().view(-1) for p in params]  # type: ignore

    def loss_at(flat: torch.Tensor, index: int, value: float) -> float:
        with torch.no_grad():
            flat[index] = value
            return float(loss_fn(net(x), t).item())

    def central(flat: torch.Tensor, index: int, h: float) -> float:
        orig = float(flat[index].item())
        plus = loss_at(flat, index, orig + h)
        minus = loss_at(flat, index, orig - h)
        with torch.no_grad():
            flat[index] = orig
        return (plus - minus) / (2 * h)

    rng = named_rng(seed, 'gradient_check')
    rel_errors: List[float] = []
    n_kinks = 0
    for _ in range(10 * n_params):
        if len(rel_errors) == n_params:
            break
        flat_index = int(rng.integers(int(bounds[-1])))
        p_index = int(np.searchsorted(bounds, flat_index, side='right'))
        offset = flat_index - (int(bounds[p_index - 1]) if p_index else 0)
        flat = params[p_index].data.view(-1)

        fd = central(flat, offset, step)
        fd_half = central(flat, offset, step / 2)
        if _rel(fd, fd_half) > kink_tolerance:
            n_kinks += 1
            continue
        rel_errors.append(_rel(float(grads[p_index][offset].item()), fd))

    return GradientCheckResult(rel_errors=rel_errors, n_kinks=n_kinks)
