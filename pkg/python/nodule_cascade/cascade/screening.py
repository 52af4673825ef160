import dataclasses
import enum
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np
import pandas as pd
import torch
from cachetools import LRUCache, cached

from ..interfaces import ArchID, CheckpointError, FusedInput, ModelCheckpoint, ScreenResult, ShapeMismatchError, \
    SliceSample, HUWindow
from ..models import CascadeNet, model_from_checkpoint

__all__ = ['DEFAULT_THRESHOLD', 'Aggregation', 'ScreenOpts', 'materialize', 'screen_slices', 'fuse_inputs',
           'binarize', 'write_screen_results']

DEFAULT_THRESHOLD = 0.35

PathLike = Union[str, Path]
ModelLike = Union[ModelCheckpoint, CascadeNet]


class Aggregation(enum.Enum):
    MEAN = 'mean'
    """Mean malignant probability over suspicious slices"""

    MAJORITY = 'majority'
    """Fraction of suspicious slices voting malignant"""


@dataclasses.dataclass(frozen=True)
class ScreenOpts:
    """Inference settings of the cascade besides the discriminator threshold."""

    window: HUWindow = HUWindow()
    """Intensity window applied before screening"""

    aggregation: Aggregation = Aggregation.MEAN
    """Slice to case aggregation rule"""

    binarize: bool = False
    """Threshold the probability map at 0.5 before fusion"""

    batch_size: int = 16
    """Slices per forward pass"""

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError(f'batch_size must be >= 1, got {self.batch_size}')


@cached(cache=LRUCache(maxsize=8), key=lambda ckpt: (ckpt.arch_id, ckpt.input_hw, ckpt.digest))
def _cached_model(ckpt: ModelCheckpoint) -> CascadeNet:
    return model_from_checkpoint(ckpt)


def materialize(model: ModelLike, expected: Sequence[ArchID]) -> CascadeNet:
    """
    Turn a checkpoint into an inference-mode network, reusing networks already built from the same digest.

    :param model: checkpoint or network
    :param expected: architectures accepted here
    :return: the network
    """
    if model.arch_id not in expected:
        raise CheckpointError(f'arch mismatch: expected one of {[a.value for a in expected]}, '
                              f'got {model.arch_id.value}')
    if isinstance(model, ModelCheckpoint):
        return _cached_model(model)
    return model.eval()


def _predict(model: CascadeNet, inputs: np.ndarray, batch_size: int) -> np.ndarray:
    outputs = []
    dtype = next(model.parameters()).dtype
    with torch.no_grad():
        for start in range(0, len(inputs), batch_size):
            outputs.append(model(torch.as_tensor(inputs[start:start + batch_size], dtype=dtype)).numpy())
    return np.concatenate(outputs) if outputs else np.zeros((0,))


def screen_slices(seg: ModelLike,
                  slices: Sequence[SliceSample],
                  threshold: float = DEFAULT_THRESHOLD,
                  batch_size: int = 16) -> List[ScreenResult]:
    """
    Run the screening network over slices and apply the discriminator rule max(prob_map) > threshold.

    Non-suspicious slices are kept in the output, flagged.

    :param seg: screening checkpoint or network
    :param slices: normalized slices
    :param threshold: discriminator threshold on the probability map
    :param batch_size: slices per forward pass
    :return: one ScreenResult per slice, in input order
    """
    net = materialize(seg, [ArchID.UNET_SEG])
    if not slices:
        return []
    images = np.stack([s.image for s in slices]).astype(np.float32)[:, None]
    prob_maps = _predict(net, images, batch_size)
    return [ScreenResult.from_prob_map(s.series_uid, s.slice_index, prob_maps[i], threshold)
            for i, s in enumerate(slices)]


def fuse_inputs(ct_slice: np.ndarray, prob_map: np.ndarray) -> FusedInput:
    """Stack a CT slice and its probability map into a two-channel input, values unchanged."""
    if ct_slice.shape != prob_map.shape:
        raise ShapeMismatchError('probability map shape', ct_slice.shape, prob_map.shape)
    return FusedInput(channels=np.stack([ct_slice, prob_map]))


def binarize(prob_map: np.ndarray) -> np.ndarray:
    return (prob_map >= 0.5).astype(prob_map.dtype)


def write_screen_results(path: PathLike, results: Sequence[ScreenResult]) -> None:
    pd.DataFrame([(r.series_uid, r.slice_index, repr(r.max_prob), int(r.suspicious)) for r in results],
                 columns=['seriesuid', 'slice_index', 'max_prob', 'suspicious']).to_csv(path, index=False)
