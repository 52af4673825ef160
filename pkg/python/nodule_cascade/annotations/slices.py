from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..interfaces import CaseLabel, MaskVolume, NormalizedVolume, ShapeMismatchError, SliceSample

__all__ = ['DEFAULT_PAD', 'select_slices', 'extract_slice_samples', 'write_slice_indices', 'read_slice_indices']

DEFAULT_PAD = 5

PathLike = Union[str, Path]


def select_slices(mask: MaskVolume, pad: int = DEFAULT_PAD) -> List[int]:
    """
    Slices spanning the mask's nonzero extent widened by pad on both sides, clamped to the volume.

    :param mask: ground-truth mask
    :param pad: number of extra slices before and after the extent
    :return: ascending contiguous slice indices, empty for an all-zero mask
    """
    if pad < 0:
        raise ValueError(f'pad must be >= 0, got {pad}')
    nonzero = np.flatnonzero(mask.voxels.reshape(mask.nz, -1).any(axis=1))
    if len(nonzero) == 0:
        return []
    start = max(0, int(nonzero[0]) - pad)
    stop = min(mask.nz - 1, int(nonzero[-1]) + pad)
    return list(range(start, stop + 1))


def extract_slice_samples(norm: NormalizedVolume,
                          mask: Optional[MaskVolume],
                          indices: Sequence[int],
                          label: Optional[CaseLabel] = None,
                          series_uid: str = '') -> List[SliceSample]:
    """
    Cut axial slices out of a normalized volume and its mask. Pixel values are carried over unchanged.

    :param norm: normalized volume
    :param mask: paired mask, or None for unlabeled scans
    :param indices: slice indices to extract
    :param label: optional case label attached to every sample
    :param series_uid: series the samples come from
    :return: one SliceSample per index
    """
    if mask is not None and mask.voxels.shape != norm.voxels.shape:
        raise ShapeMismatchError('mask grid', norm.voxels.shape, mask.voxels.shape)
    samples = []
    for i in indices:
        if not 0 <= i < norm.nz:
            raise IndexError(f'slice index {i} outside 0..{norm.nz - 1}')
        samples.append(SliceSample(image=norm.voxels[i],
                                   mask=None if mask is None else mask.voxels[i],
                                   series_uid=series_uid,
                                   slice_index=int(i),
                                   case_label=label))
    return samples


def write_slice_indices(path: PathLike, indices: Mapping[str, Sequence[int]]) -> None:
    rows = [(uid, int(i)) for uid, idx in indices.items() for i in idx]
    pd.DataFrame(rows, columns=['seriesuid', 'slice_index']).to_csv(path, index=False)


def read_slice_indices(path: PathLike) -> Dict[str, List[int]]:
    df = pd.read_csv(path, dtype={'seriesuid': str, 'slice_index': int})
    out: Dict[str, List[int]] = {}
    for uid, i in zip(df['seriesuid'], df['slice_index']):
        out.setdefault(uid, []).append(int(i))
    return out
