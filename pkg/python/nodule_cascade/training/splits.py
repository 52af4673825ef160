import dataclasses
import enum
import io
from pathlib import Path
from typing import Any, List, NamedTuple, Sequence, Tuple, TypeVar, Union

import pandas as pd

from ..interfaces import ConfigError, TrainingError
from ..utils import named_rng, round_half_up, sha256_bytes

__all__ = ['SplitUnit', 'SplitConfig', 'SEGMENTATION_SPLIT', 'CLASSIFIER_SPLIT', 'DatasetSplit', 'split_dataset',
           'write_split', 'read_split', 'split_digest']

_T = TypeVar('_T')

PathLike = Union[str, Path]

_SUBSETS = ('train', 'val', 'test')


class SplitUnit(enum.Enum):
    SCAN = 'scan'
    CASE = 'case'


@dataclasses.dataclass(frozen=True)
class SplitConfig:
    """How whole scans or cases are partitioned into train, validation and test subsets."""

    fractions: Tuple[float, float, float] = (0.8, 0.05, 0.15)
    """(train, val, test) fractions summing to 1"""

    seed: int = 0
    """Seed of the shuffling stream"""

    unit: SplitUnit = SplitUnit.SCAN
    """Splitting granularity, never slices"""

    def __post_init__(self) -> None:
        if len(self.fractions) != 3 or any(f < 0 for f in self.fractions):
            raise ConfigError(f'split fractions must be three non-negative values, got {self.fractions}')
        if abs(sum(self.fractions) - 1.) > 1e-9:
            raise ConfigError(f'split fractions must sum to 1, got {self.fractions}')


SEGMENTATION_SPLIT = (0.8, 0.05, 0.15)
CLASSIFIER_SPLIT = (0.6, 0.15, 0.25)


class DatasetSplit(NamedTuple):
    train: List[Any]
    val: List[Any]
    test: List[Any]


def split_dataset(units: Sequence[_T], cfg: SplitConfig) -> DatasetSplit:
    """
    Shuffle whole units under the config seed and cut them into train, val and test.

    Train and val take round_half_up(fraction * n) units each (val capped by what is left), test takes the
    remainder. When the test fraction is 0 any remainder goes to train.

    :param units: scans or cases, never slices
    :param cfg: split configuration
    :return: DatasetSplit(train, val, test)
    """
    n = len(units)
    if n == 0:
        raise TrainingError('cannot split an empty list of units')
    f_train, f_val, f_test = cfg.fractions
    n_train = min(round_half_up(f_train * n), n)
    n_val = min(round_half_up(f_val * n), n - n_train)
    n_test = n - n_train - n_val if f_test > 0 else 0
    n_train = n - n_val - n_test

    order = named_rng(cfg.seed, 'split').permutation(n)
    shuffled = [units[i] for i in order]
    return DatasetSplit(train=shuffled[:n_train],
                        val=shuffled[n_train:n_train + n_val],
                        test=shuffled[n_train + n_val:])


def _split_frame(split: DatasetSplit) -> pd.DataFrame:
    rows = [(uid, subset) for subset, uids in zip(_SUBSETS, split) for uid in uids]
    return pd.DataFrame(rows, columns=['seriesuid', 'subset'])


def write_split(path: PathLike, split: DatasetSplit) -> None:
    _split_frame(split).to_csv(path, index=False)


def read_split(path: PathLike) -> DatasetSplit:
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    unknown = set(df['subset']) - set(_SUBSETS)
    if unknown:
        raise ConfigError(f'{path}: unknown subset(s) {sorted(unknown)}')
    return DatasetSplit(*[df['seriesuid'][df['subset'] == s].tolist() for s in _SUBSETS])


def split_digest(split: DatasetSplit) -> str:
    """Digest of the split's CSV rendering, used to check that two runs saw the same partition"""
    buf = io.StringIO()
    _split_frame(split).to_csv(buf, index=False)
    return sha256_bytes(buf.getvalue().encode('utf-8'))
