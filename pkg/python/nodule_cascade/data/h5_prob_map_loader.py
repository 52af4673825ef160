from pathlib import Path
from typing import List

import h5py as h5
import numpy as np

from .interfaces import ProbMapLoader, ProbMapRecord

__all__ = ['H5ProbMapLoader']


class H5ProbMapLoader(ProbMapLoader):
    """Implement a H5 probability map loader"""

    _filename: Path

    def __init__(self, filename: str, path: Path = Path('.')) -> None:
        """
        :param filename: filename
        :param path: directory of the h5 file
        """
        self._filename = Path(path) / filename

    def series_uids(self) -> List[str]:
        with h5.File(self._filename, mode='r') as f:
            order = str(f.attrs.get('order', ''))
        return order.split('\n') if order else []

    def get(self, series_uid: str) -> ProbMapRecord:
        with h5.File(self._filename, mode='r') as f:
            if series_uid not in f:
                raise KeyError(f'series {series_uid} not in {self._filename}')
            g = f[series_uid]
            return ProbMapRecord(series_uid=series_uid,
                                 slice_indices=np.asarray(g['slice_indices'][:]),
                                 prob_maps=np.asarray(g['prob_maps'][:]),
                                 max_probs=np.asarray(g['max_probs'][:]))
