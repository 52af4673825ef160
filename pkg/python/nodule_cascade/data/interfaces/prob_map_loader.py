from abc import ABC, abstractmethod
from typing import List

from .prob_map_saver import ProbMapRecord

__all__ = ['ProbMapLoader']


class ProbMapLoader(ABC):
    """An interface for a probability map loader."""

    @abstractmethod
    def series_uids(self) -> List[str]:
        """Series present in the store, in the order they were recorded"""

    @abstractmethod
    def get(self, series_uid: str) -> ProbMapRecord:
        """Return the maps of one series"""
