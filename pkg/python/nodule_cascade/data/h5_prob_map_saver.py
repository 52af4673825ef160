from pathlib import Path

import h5py as h5
import numpy as np

from .interfaces import ProbMapRecord, ProbMapSaver

__all__ = ['H5ProbMapSaver']


class H5ProbMapSaver(ProbMapSaver):
    """Implement a H5 probability map saver, one group per series"""

    _filename: Path
    _f: h5.File

    def __init__(self, filename: str, path: Path = Path('.'), overwrite: bool = False) -> None:
        """
        :param filename: filename
        :param path: directory of the h5 file
        :param overwrite: set to True to overwrite the file if one exists already at the specified path
        """
        self._filename = Path(path) / filename
        if self._filename.exists() and not overwrite:
            raise ValueError(f'{self._filename} already exists! Specify a new path or set overwrite=True')
        self._f = h5.File(self._filename, mode='w')
        self._f.attrs['order'] = ''

    def record(self, record: ProbMapRecord) -> None:
        if record.series_uid in self._f:
            raise ValueError(f'series {record.series_uid} already recorded')
        g = self._f.create_group(record.series_uid)
        g.create_dataset('slice_indices', data=np.asarray(record.slice_indices, dtype=np.int64))
        g.create_dataset('prob_maps', data=np.asarray(record.prob_maps, dtype=np.float32), compression='gzip')
        g.create_dataset('max_probs', data=np.asarray(record.max_probs, dtype=np.float32))
        order = str(self._f.attrs['order'])
        self._f.attrs['order'] = f'{order}\n{record.series_uid}' if order else record.series_uid
        self._f.flush()

    def close(self) -> None:
        self._f.close()
