from typing import Any, Callable, List, Optional, Sequence, TypeVar

from ..interfaces import CaseLabel, ConfigError
from ..utils import named_rng

__all__ = ['oversample_benign']

_T = TypeVar('_T')


def _case_label(sample: Any) -> Optional[CaseLabel]:
    return sample.case_label


def oversample_benign(samples: Sequence[_T],
                      factor: int,
                      seed: int = 0,
                      label_of: Callable[[_T], Optional[CaseLabel]] = _case_label) -> List[_T]:
    """
    Repeat every benign sample so it appears factor times in total, keep malignant samples once, then shuffle.

    :param samples: labeled samples
    :param factor: total multiplicity of benign samples
    :param seed: root seed of the shuffling stream
    :param label_of: label accessor, defaults to the sample's case_label
    :return: the oversampled, shuffled list
    """
    if factor < 1:
        raise ConfigError(f'oversample factor must be >= 1, got {factor}')
    out: List[_T] = []
    for s in samples:
        out.extend([s] * (factor if label_of(s) == CaseLabel.BENIGN else 1))
    order = named_rng(seed, 'oversample').permutation(len(out))
    return [out[i] for i in order]
