import dataclasses
from typing import ClassVar, Tuple

import numpy as np

from .errors import ShapeMismatchError, VolumeFormatError

__all__ = ['Vec3', 'HUWindow', 'DEFAULT_HU_WINDOW', 'GridVolume', 'CtVolume', 'NormalizedVolume', 'MaskVolume']

Vec3 = Tuple[float, float, float]


@dataclasses.dataclass(frozen=True)
class HUWindow:
    """Intensity window mapped onto [0, 1] by normalize_hu."""

    lo: float = -1000.
    """Intensity mapped to 0"""

    hi: float = 400.
    """Intensity mapped to 1"""

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError(f'HU window needs lo < hi, got lo={self.lo}, hi={self.hi}')


DEFAULT_HU_WINDOW = HUWindow()


@dataclasses.dataclass(frozen=True, eq=False)
class GridVolume:
    """
    A 3D voxel grid on an axis-aligned physical frame.

    The voxel array is stored with numpy shape (nz, ny, nx) so that x runs fastest in memory, matching the raw file
    layout. Arrays are copied on construction and made read-only.
    """

    voxels: np.ndarray
    origin: Vec3
    spacing: Vec3

    dtype: ClassVar[np.dtype] = np.dtype(np.int16)

    def __post_init__(self) -> None:
        voxels = np.asarray(self.voxels)
        if voxels.ndim != 3:
            raise ShapeMismatchError('voxel array dimensions', 3, voxels.ndim)
        if min(voxels.shape) < 1:
            raise VolumeFormatError(f'every dimension must hold at least one voxel, got shape {voxels.shape}')
        if len(self.origin) != 3 or len(self.spacing) != 3:
            raise VolumeFormatError('origin and spacing must both have three components')
        if not all(s > 0 for s in self.spacing):
            raise VolumeFormatError(f'spacing must be positive, got {self.spacing}')

        voxels = np.array(voxels, dtype=self.dtype, copy=True)
        voxels.setflags(write=False)
        object.__setattr__(self, 'voxels', voxels)
        object.__setattr__(self, 'origin', tuple(float(o) for o in self.origin))
        object.__setattr__(self, 'spacing', tuple(float(s) for s in self.spacing))

    @property
    def dims(self) -> Tuple[int, int, int]:
        """Voxel counts as (nx, ny, nz)"""
        nz, ny, nx = self.voxels.shape
        return nx, ny, nz

    @property
    def nz(self) -> int:
        return int(self.voxels.shape[0])

    @property
    def slice_shape(self) -> Tuple[int, int]:
        """(ny, nx) shape of one axial slice"""
        return int(self.voxels.shape[1]), int(self.voxels.shape[2])

    def same_grid(self, other: 'GridVolume') -> bool:
        return self.dims == other.dims and self.origin == other.origin and self.spacing == other.spacing


@dataclasses.dataclass(frozen=True, eq=False)
class CtVolume(GridVolume):
    """Signed 16-bit Hounsfield-like intensities."""

    dtype: ClassVar[np.dtype] = np.dtype(np.int16)


@dataclasses.dataclass(frozen=True, eq=False)
class NormalizedVolume(GridVolume):
    """Intensities windowed onto [0, 1]."""

    dtype: ClassVar[np.dtype] = np.dtype(np.float32)

    def __post_init__(self) -> None:
        super().__post_init__()
        if not np.all((self.voxels >= 0.) & (self.voxels <= 1.)):
            raise ValueError('normalized voxels must lie in [0, 1]')


@dataclasses.dataclass(frozen=True, eq=False)
class MaskVolume(GridVolume):
    """Binary {0, 1} ground-truth mask on the grid of its paired CtVolume."""

    dtype: ClassVar[np.dtype] = np.dtype(np.uint8)

    def __post_init__(self) -> None:
        super().__post_init__()
        if np.any(self.voxels > 1):
            raise ValueError('mask voxels must be 0 or 1')

    @property
    def n_set(self) -> int:
        return int(np.count_nonzero(self.voxels))
