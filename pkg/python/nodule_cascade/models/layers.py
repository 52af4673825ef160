import dataclasses
import enum
import math
from typing import Optional

import torch
from torch import nn

__all__ = ['LayerKind', 'LayerSpec', 'UpsampleMode', 'SeededDropout', 'conv3x3', 'init_fan_in_uniform']


class LayerKind(enum.Enum):
    CONV3X3 = 'conv3x3'
    CONV1X1 = 'conv1x1'
    MAXPOOL2X2 = 'maxpool2x2'
    UPSAMPLE2X = 'upsample2x'
    CONCAT_SKIP = 'concat_skip'
    DROPOUT = 'dropout'
    DENSE = 'dense'
    RELU = 'relu'
    SIGMOID = 'sigmoid'
    SOFTMAX = 'softmax'
    FLATTEN = 'flatten'


@dataclasses.dataclass(frozen=True)
class LayerSpec:
    """One row of an architecture's layer table."""

    kind: LayerKind
    channels_out: Optional[int] = None
    dropout_rate: Optional[float] = None


class UpsampleMode(enum.Enum):
    NEAREST = 'nearest'
    """Nearest-neighbour doubling, no parameters"""

    TRANSPOSE = 'transpose'
    """2x2 stride-2 transposed convolution keeping the channel count"""


class SeededDropout(nn.Module):
    """Inverted dropout drawing its mask from a settable torch.Generator."""

    p: float
    generator: Optional[torch.Generator]

    def __init__(self, p: float = 0.5):
        super().__init__()
        assert 0. <= p < 1., 'dropout rate must lie in [0, 1)'
        self.p = p
        self.generator = None

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if not self.training or self.p == 0.:
            return x
        keep = torch.rand(x.shape, generator=self.generator, dtype=x.dtype, device=x.device) >= self.p
        return x * keep.to(x.dtype) / (1. - self.p)

    def extra_repr(self) -> str:
        return f'p={self.p}'


def conv3x3(c_in: int, c_out: int) -> nn.Conv2d:
    return nn.Conv2d(c_in, c_out, kernel_size=3, stride=1, padding=1)


def init_fan_in_uniform(module: nn.Module, generator: torch.Generator) -> None:
    """
    Draw every conv and dense weight and bias from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).

    Modules are visited in registration order so the result only depends on the generator's seed.
    """
    with torch.no_grad():
        for m in module.modules():
            if isinstance(m, (nn.Conv2d, nn.ConvTranspose2d)):
                fan_in = m.in_channels * m.kernel_size[0] * m.kernel_size[1]
            elif isinstance(m, nn.Linear):
                fan_in = m.in_features
            else:
                continue
            bound = 1. / math.sqrt(fan_in)
            m.weight.uniform_(-bound, bound, generator=generator)
            if m.bias is not None:
                m.bias.uniform_(-bound, bound, generator=generator)
