from abc import abstractmethod
from typing import Any, Dict, List, Optional, Tuple

import torch
from torch import nn

from .layers import LayerKind, LayerSpec, SeededDropout, UpsampleMode, conv3x3
from ..interfaces import ArchID, ShapeMismatchError

__all__ = ['CascadeNet', 'UNetBody', 'SegmentationNet', 'ClassifierNet', 'BaselineFCNet', 'BaselineEncDecNet']

_L = LayerSpec
_K = LayerKind


class CascadeNet(nn.Module):
    """
    Base class of the four architectures.

    Every network declares its input shape at construction and refuses batches of any other shape.
    """

    arch_id: Any = None
    input_hw: Tuple[int, int]
    in_channels: int

    def __init__(self, input_hw: Tuple[int, int], in_channels: int):
        super().__init__()
        self.input_hw = (int(input_hw[0]), int(input_hw[1]))
        self.in_channels = in_channels

    @property
    def input_shape(self) -> Tuple[int, int, int]:
        """(C, H, W) of a single sample"""
        return (self.in_channels,) + self.input_hw

    def check_input(self, x: torch.Tensor) -> None:
        if x.dim() != 4 or tuple(x.shape[1:]) != self.input_shape:
            raise ShapeMismatchError(f'{self.arch_id.value} input batch', ('N',) + self.input_shape, tuple(x.shape))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        self.check_input(x)
        return self._forward(x)

    @abstractmethod
    def _forward(self, x: torch.Tensor) -> torch.Tensor:
        pass

    @abstractmethod
    def layer_specs(self) -> List[LayerSpec]:
        pass

    def options(self) -> Dict[str, Any]:
        """Constructor options needed to rebuild the network from a checkpoint"""
        return {}

    def set_dropout_generator(self, generator: Optional[torch.Generator]) -> None:
        for m in self.modules():
            if isinstance(m, SeededDropout):
                m.generator = generator


def _check_divisible(input_hw: Tuple[int, int], factor: int) -> None:
    if input_hw[0] % factor or input_hw[1] % factor or min(input_hw) < factor:
        raise ShapeMismatchError('input_hw', f'multiples of {factor}', tuple(input_hw))


class UNetBody(nn.Module):
    """
    Five single-conv encoder levels (width, 2x, 4x, 8x, 16x) with a max pool after the first four and dropout after
    the last two, followed by four upsample + concat + conv decoder levels back to the base width.
    """

    widths: Tuple[int, ...]

    def __init__(self, in_channels: int, width: int, upsample: UpsampleMode, dropout: float):
        super().__init__()
        self.widths = tuple(width * 2 ** i for i in range(5))
        w = self.widths
        self.encoder = nn.ModuleList([conv3x3(c_in, c_out) for c_in, c_out in zip((in_channels,) + w[:4], w)])
        self.encoder_dropout = nn.ModuleList([SeededDropout(dropout), SeededDropout(dropout)])
        self.pool = nn.MaxPool2d(kernel_size=2, stride=2)
        if upsample == UpsampleMode.TRANSPOSE:
            self.upsample = nn.ModuleList([nn.ConvTranspose2d(w[i + 1], w[i + 1], kernel_size=2, stride=2)
                                           for i in reversed(range(4))])
        else:
            self.upsample = nn.ModuleList([nn.Upsample(scale_factor=2, mode='nearest') for _ in range(4)])
        self.decoder = nn.ModuleList([conv3x3(w[i + 1] + w[i], w[i]) for i in reversed(range(4))])
        self.relu = nn.ReLU()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        skips = []
        for level, conv in enumerate(self.encoder):
            x = self.relu(conv(x))
            if level >= 3:
                x = self.encoder_dropout[level - 3](x)
            if level < 4:
                skips.append(x)
                x = self.pool(x)
        for up, conv, skip in zip(self.upsample, self.decoder, reversed(skips)):
            x = self.relu(conv(torch.cat([up(x), skip], dim=1)))
        return x

    def layer_specs(self, dropout: float) -> List[LayerSpec]:
        specs = []
        for level, c in enumerate(self.widths):
            specs += [_L(_K.CONV3X3, c), _L(_K.RELU)]
            if level >= 3:
                specs.append(_L(_K.DROPOUT, dropout_rate=dropout))
            if level < 4:
                specs.append(_L(_K.MAXPOOL2X2))
        for c in reversed(self.widths[:4]):
            specs += [_L(_K.UPSAMPLE2X, c * 2), _L(_K.CONCAT_SKIP, c * 3), _L(_K.CONV3X3, c), _L(_K.RELU)]
        return specs


class SegmentationNet(CascadeNet):
    """U-Net screening network: one channel in, an (H, W) sigmoid probability map out."""

    arch_id = ArchID.UNET_SEG

    def __init__(self, input_hw: Tuple[int, int], width: int = 64, upsample: UpsampleMode = UpsampleMode.NEAREST,
                 dropout: float = 0.5):
        _check_divisible(input_hw, 16)
        super().__init__(input_hw, in_channels=1)
        self._width = width
        self._upsample = UpsampleMode(upsample)
        self._dropout = dropout
        self.body = UNetBody(1, width, self._upsample, dropout)
        self.head = nn.Conv2d(width, 1, kernel_size=1)

    def _forward(self, x: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.head(self.body(x)))[:, 0]

    def layer_specs(self) -> List[LayerSpec]:
        return self.body.layer_specs(self._dropout) + [_L(_K.CONV1X1, 1), _L(_K.SIGMOID)]

    def options(self) -> Dict[str, Any]:
        return {'width': self._width, 'upsample': self._upsample.value, 'dropout': self._dropout}


class ClassifierNet(CascadeNet):
    """Three conv + pool levels (8, 16, 32 channels) over the fused input, then dense 128 and a 2-way softmax."""

    arch_id = ArchID.CASCADE_CLS

    def __init__(self, input_hw: Tuple[int, int], dropout: float = 0.5):
        _check_divisible(input_hw, 8)
        super().__init__(input_hw, in_channels=2)
        self._dropout = dropout
        self.convs = nn.ModuleList([conv3x3(2, 8), conv3x3(8, 16), conv3x3(16, 32)])
        self.pool = nn.MaxPool2d(kernel_size=2, stride=2)
        self.dropout = SeededDropout(dropout)
        self.relu = nn.ReLU()
        self.flat_features = 32 * (input_hw[0] // 8) * (input_hw[1] // 8)
        self.fc = nn.Linear(self.flat_features, 128)
        self.out = nn.Linear(128, 2)

    def _forward(self, x: torch.Tensor) -> torch.Tensor:
        for i, conv in enumerate(self.convs):
            x = self.relu(conv(x))
            if i == len(self.convs) - 1:
                x = self.dropout(x)
            x = self.pool(x)
        x = self.relu(self.fc(torch.flatten(x, start_dim=1)))
        return torch.softmax(self.out(x), dim=1)

    def layer_specs(self) -> List[LayerSpec]:
        specs: List[LayerSpec] = []
        for c in (8, 16, 32):
            specs += [_L(_K.CONV3X3, c), _L(_K.RELU)]
            if c == 32:
                specs.append(_L(_K.DROPOUT, dropout_rate=self._dropout))
            specs.append(_L(_K.MAXPOOL2X2))
        return specs + [_L(_K.FLATTEN, self.flat_features), _L(_K.DENSE, 128), _L(_K.RELU), _L(_K.DENSE, 2),
                        _L(_K.SOFTMAX)]

    def options(self) -> Dict[str, Any]:
        return {'dropout': self._dropout}


class BaselineFCNet(CascadeNet):
    """Fused input flattened straight into dense 128 and a 2-way softmax."""

    arch_id = ArchID.BASELINE_FC

    def __init__(self, input_hw: Tuple[int, int]):
        super().__init__(input_hw, in_channels=2)
        self.fc = nn.Linear(2 * self.input_hw[0] * self.input_hw[1], 128)
        self.out = nn.Linear(128, 2)

    def _forward(self, x: torch.Tensor) -> torch.Tensor:
        x = torch.relu(self.fc(torch.flatten(x, start_dim=1)))
        return torch.softmax(self.out(x), dim=1)

    def layer_specs(self) -> List[LayerSpec]:
        return [_L(_K.FLATTEN, 2 * self.input_hw[0] * self.input_hw[1]), _L(_K.DENSE, 128), _L(_K.RELU),
                _L(_K.DENSE, 2), _L(_K.SOFTMAX)]


class BaselineEncDecNet(CascadeNet):
    """The U-Net topology at reduced width over the fused input, a 1x1 conv to one map, then dense 128 and softmax."""

    arch_id = ArchID.BASELINE_ENCDEC

    def __init__(self, input_hw: Tuple[int, int], width: int = 8, upsample: UpsampleMode = UpsampleMode.NEAREST,
                 dropout: float = 0.5):
        _check_divisible(input_hw, 16)
        super().__init__(input_hw, in_channels=2)
        self._width = width
        self._upsample = UpsampleMode(upsample)
        self._dropout = dropout
        self.body = UNetBody(2, width, self._upsample, dropout)
        self.head = nn.Conv2d(width, 1, kernel_size=1)
        self.fc = nn.Linear(self.input_hw[0] * self.input_hw[1], 128)
        self.out = nn.Linear(128, 2)

    def _forward(self, x: torch.Tensor) -> torch.Tensor:
        x = torch.flatten(self.head(self.body(x)), start_dim=1)
        x = torch.relu(self.fc(x))
        return torch.softmax(self.out(x), dim=1)

    def layer_specs(self) -> List[LayerSpec]:
        return self.body.layer_specs(self._dropout) + [
            _L(_K.CONV1X1, 1), _L(_K.FLATTEN, self.input_hw[0] * self.input_hw[1]), _L(_K.DENSE, 128), _L(_K.RELU),
            _L(_K.DENSE, 2), _L(_K.SOFTMAX)]

    def options(self) -> Dict[str, Any]:
        return {'width': self._width, 'upsample': self._upsample.value, 'dropout': self._dropout}
