from typing import Any, Callable, Dict, Tuple, Union

import numpy as np
import pandas as pd
import torch
from torch import nn

from .layers import UpsampleMode, init_fan_in_uniform
from .networks import BaselineEncDecNet, BaselineFCNet, CascadeNet, ClassifierNet, SegmentationNet
from ..interfaces import ArchID
from ..utils import named_rng, torch_generator

__all__ = ['ModelFactory', 'build_segmentation_net', 'build_classifier_net', 'build_baseline_fc',
           'build_baseline_encdec', 'forward', 'count_parameters', 'expected_parameter_count', 'layer_table']

_ARCH_REGISTRY: Dict[ArchID, Callable[..., CascadeNet]] = {}


def _register_arch(arch_id: ArchID, builder: Callable[..., CascadeNet]) -> None:
    if arch_id not in _ARCH_REGISTRY:
        _ARCH_REGISTRY[arch_id] = builder
        return

    raise RuntimeError(f'Architecture {arch_id} already registered')


class ModelFactory:
    @staticmethod
    def build(arch_id: Union[str, ArchID], input_hw: Tuple[int, int], seed: int = 0, **options: Any) -> CascadeNet:
        """
        Build a network with seeded fan-in uniform initialization.

        :param arch_id: architecture identifier
        :param input_hw: (H, W) of the input slices
        :param seed: root seed of the initialization stream
        :param options: architecture options, e.g. upsample or width
        :return: the network in inference mode
        """
        arch = ArchID(arch_id)
        if arch not in _ARCH_REGISTRY:
            raise ValueError(f'Unknown architecture {arch}.')

        model = _ARCH_REGISTRY[arch](input_hw, **options)
        init_fan_in_uniform(model, torch_generator(named_rng(seed, 'init', list(ArchID).index(arch))))
        return model.eval()


_register_arch(ArchID.UNET_SEG, SegmentationNet)
_register_arch(ArchID.CASCADE_CLS, ClassifierNet)
_register_arch(ArchID.BASELINE_FC, BaselineFCNet)
_register_arch(ArchID.BASELINE_ENCDEC, BaselineEncDecNet)


def build_segmentation_net(input_hw: Tuple[int, int], seed: int = 0, **options: Any) -> SegmentationNet:
    return ModelFactory.build(ArchID.UNET_SEG, input_hw, seed, **options)  # type: ignore


def build_classifier_net(input_hw: Tuple[int, int], seed: int = 0, **options: Any) -> ClassifierNet:
    return ModelFactory.build(ArchID.CASCADE_CLS, input_hw, seed, **options)  # type: ignore


def build_baseline_fc(input_hw: Tuple[int, int], seed: int = 0) -> BaselineFCNet:
    return ModelFactory.build(ArchID.BASELINE_FC, input_hw, seed)  # type: ignore


def build_baseline_encdec(input_hw: Tuple[int, int], seed: int = 0, **options: Any) -> BaselineEncDecNet:
    return ModelFactory.build(ArchID.BASELINE_ENCDEC, input_hw, seed, **options)  # type: ignore


def forward(model: CascadeNet, batch: Union[np.ndarray, torch.Tensor]) -> np.ndarray:
    """
    Run a batch through a network without recording gradients.

    Dropout is active only if the model is in training mode.

    :param model: the network
    :param batch: (N, C, H, W) batch
    :return: numpy outputs, (N, H, W) maps for the segmenter or (N, 2) probabilities for classifiers
    """
    x = torch.as_tensor(batch, dtype=next(model.parameters()).dtype)
    with torch.no_grad():
        return model(x).numpy()


def count_parameters(model: nn.Module) -> int:
    return int(sum(p.numel() for p in model.parameters()))


def _conv(k: int, c_in: int, c_out: int) -> int:
    return (k * k * c_in + 1) * c_out


def _unet_body(c_in: int, width: int, upsample: UpsampleMode) -> int:
    w = [width * 2 ** i for i in range(5)]
    total = sum(_conv(3, a, b) for a, b in zip([c_in] + w[:4], w))
    for i in range(4):
        if upsample == UpsampleMode.TRANSPOSE:
            total += 2 * 2 * w[i + 1] * w[i + 1] + w[i + 1]
        total += _conv(3, w[i + 1] + w[i], w[i])
    return total


def expected_parameter_count(arch_id: Union[str, ArchID],
                             input_hw: Tuple[int, int],
                             upsample: Union[str, UpsampleMode] = UpsampleMode.NEAREST,
                             width: int = 0) -> int:
    """
    Parameter count of an architecture from per-layer arithmetic, (k * k * c_in + 1) * c_out per conv and
    (n_in + 1) * n_out per dense layer.

    :param arch_id: architecture
    :param input_hw: (H, W)
    :param upsample: decoder upsampling mode of the U-Net style networks
    :param width: U-Net base width, 0 for the architecture default
    :return: number of trainable parameters
    """
    arch = ArchID(arch_id)
    mode = UpsampleMode(upsample)
    h, w = input_hw
    if arch == ArchID.UNET_SEG:
        return _unet_body(1, width or 64, mode) + _conv(1, width or 64, 1)
    if arch == ArchID.CASCADE_CLS:
        flat = 32 * (h // 8) * (w // 8)
        return _conv(3, 2, 8) + _conv(3, 8, 16) + _conv(3, 16, 32) + (flat + 1) * 128 + 129 * 2
    if arch == ArchID.BASELINE_FC:
        return (2 * h * w + 1) * 128 + 129 * 2
    return _unet_body(2, width or 8, mode) + _conv(1, width or 8, 1) + (h * w + 1) * 128 + 129 * 2


def layer_table(model: CascadeNet) -> pd.DataFrame:
    """Layer kinds and output channels of an architecture, one row per layer."""
    rows = [{'layer': i, 'kind': s.kind.value,
             'channels_out': '' if s.channels_out is None else s.channels_out,
             'dropout_rate': '' if s.dropout_rate is None else s.dropout_rate}
            for i, s in enumerate(model.layer_specs())]
    return pd.DataFrame(rows, columns=['layer', 'kind', 'channels_out', 'dropout_rate'])
