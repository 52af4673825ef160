import dataclasses
from abc import ABC, abstractmethod
from typing import Tuple

import numpy as np

from ...interfaces import ShapeMismatchError

__all__ = ['ProbMapRecord', 'ProbMapSaver']


@dataclasses.dataclass(frozen=True, eq=False)
class ProbMapRecord:
    """Screening output of one series."""

    series_uid: str

    slice_indices: np.ndarray
    """(K,) axial index of every stored map"""

    prob_maps: np.ndarray
    """(K, H, W) nodule probability maps"""

    max_probs: np.ndarray
    """(K,) maximum of every map"""

    def __post_init__(self) -> None:
        k = len(self.slice_indices)
        if self.prob_maps.ndim != 3 or self.prob_maps.shape[0] != k:
            raise ShapeMismatchError('prob map stack shape', f'({k}, H, W)', self.prob_maps.shape)
        if self.max_probs.shape != (k,):
            raise ShapeMismatchError('max prob shape', (k,), self.max_probs.shape)

    @property
    def slice_shape(self) -> Tuple[int, int]:
        return int(self.prob_maps.shape[1]), int(self.prob_maps.shape[2])


class ProbMapSaver(ABC):
    """An interface for a probability map saver."""

    @abstractmethod
    def record(self, record: ProbMapRecord) -> None:
        """Store the maps of one series"""

    def close(self) -> None:
        """Perform any closing operations."""
        pass
