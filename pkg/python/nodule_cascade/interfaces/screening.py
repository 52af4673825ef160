import dataclasses
from typing import Optional, Tuple

import numpy as np

from .case_label import CaseLabel
from .errors import ShapeMismatchError

__all__ = ['ScreenResult', 'FusedInput', 'FusedSample', 'CaseVerdict']


@dataclasses.dataclass(frozen=True, eq=False)
class ScreenResult:
    """Outcome of the discriminator rule on one slice."""

    series_uid: str
    slice_index: int
    prob_map: np.ndarray
    max_prob: float
    suspicious: bool

    @staticmethod
    def from_prob_map(series_uid: str, slice_index: int, prob_map: np.ndarray, threshold: float) -> 'ScreenResult':
        """
        Apply the discriminator to a probability map.

        :param series_uid: scan the slice belongs to
        :param slice_index: axial index of the slice
        :param prob_map: (H, W) nodule probability map
        :param threshold: a slice is suspicious iff its maximum probability is strictly above this value
        :return: a ScreenResult
        """
        max_prob = float(np.max(prob_map))
        return ScreenResult(series_uid=series_uid, slice_index=slice_index, prob_map=prob_map,
                            max_prob=max_prob, suspicious=max_prob > threshold)


@dataclasses.dataclass(frozen=True, eq=False)
class FusedInput:
    """Two-channel classifier input: channel 0 is the CT slice, channel 1 the nodule probability map."""

    channels: np.ndarray

    def __post_init__(self) -> None:
        if self.channels.ndim != 3 or self.channels.shape[0] != 2:
            raise ShapeMismatchError('fused input shape', '(2, H, W)', self.channels.shape)

    @property
    def ct(self) -> np.ndarray:
        return self.channels[0]

    @property
    def prob_map(self) -> np.ndarray:
        return self.channels[1]


@dataclasses.dataclass(frozen=True, eq=False)
class FusedSample:
    fused: FusedInput
    series_uid: str
    slice_index: int
    case_label: Optional[CaseLabel] = None


@dataclasses.dataclass(frozen=True)
class CaseVerdict:
    """Case-level outcome of the cascade."""

    series_uid: str

    slice_probs: Tuple[Tuple[int, float], ...]
    """(slice_index, malignant probability) for every suspicious slice, ascending by index"""

    case_score: float
    predicted_label: CaseLabel
    n_suspicious_slices: int
    no_findings: bool

    def __post_init__(self) -> None:
        assert 0. <= self.case_score <= 1., f'case score {self.case_score} outside [0, 1]'
        assert (self.predicted_label == CaseLabel.MALIGNANT) == (self.case_score >= 0.5), \
            'label must be malignant iff the case score is at least 0.5'
