import dataclasses
from typing import Optional

import numpy as np

from .case_label import CaseLabel
from .errors import AnnotationFormatError, ShapeMismatchError
from .volumes import Vec3

__all__ = ['NoduleAnnotation', 'SliceSample']


@dataclasses.dataclass(frozen=True)
class NoduleAnnotation:
    """One finding of the annotation table."""

    series_uid: str
    """Scan the finding belongs to"""

    center_world: Vec3
    """Nodule center in world mm (x, y, z)"""

    diameter_mm: float
    """Nodule diameter in mm"""

    def __post_init__(self) -> None:
        if not self.series_uid:
            raise AnnotationFormatError('empty seriesuid')
        if len(self.center_world) != 3:
            raise AnnotationFormatError(f'center needs three coordinates, got {self.center_world}')
        if not self.diameter_mm > 0:
            raise AnnotationFormatError(f'non-positive diameter {self.diameter_mm} for series {self.series_uid}')
        object.__setattr__(self, 'center_world', tuple(float(c) for c in self.center_world))
        object.__setattr__(self, 'diameter_mm', float(self.diameter_mm))

    @property
    def radius_mm(self) -> float:
        return self.diameter_mm / 2


@dataclasses.dataclass(frozen=True, eq=False)
class SliceSample:
    """A single axial slice fed to the segmentation network."""

    image: np.ndarray
    """(H, W) float32 slice in [0, 1]"""

    mask: Optional[np.ndarray]
    """(H, W) uint8 ground truth, None for unlabeled scans"""

    series_uid: str
    slice_index: int
    case_label: Optional[CaseLabel] = None

    def __post_init__(self) -> None:
        if self.image.ndim != 2:
            raise ShapeMismatchError('slice image dimensions', 2, self.image.ndim)
        if self.mask is not None and self.mask.shape != self.image.shape:
            raise ShapeMismatchError('slice mask shape', self.image.shape, self.mask.shape)
        if self.slice_index < 0:
            raise ValueError(f'negative slice index {self.slice_index}')
