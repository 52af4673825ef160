import dataclasses
import enum
import hashlib
from collections import OrderedDict
from functools import cached_property
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np

from .errors import CheckpointError

__all__ = ['ArchID', 'TrainingMeta', 'ModelCheckpoint']


class ArchID(enum.Enum):
    UNET_SEG = 'unet_seg'
    CASCADE_CLS = 'cascade_cls'
    BASELINE_FC = 'baseline_fc'
    BASELINE_ENCDEC = 'baseline_encdec'

    @property
    def is_classifier(self) -> bool:
        """True for the architectures consuming the fused two-channel input"""
        return self != ArchID.UNET_SEG

    @staticmethod
    def values() -> List[str]:
        return [a.value for a in ArchID.__members__.values()]


@dataclasses.dataclass(frozen=True)
class TrainingMeta:
    """Provenance stored next to the tensors of a checkpoint."""

    epochs: int = 0
    """Number of epochs the run was configured for"""

    best_epoch: int = 0
    """Epoch whose weights were kept (0 is the initialization)"""

    final_train_loss: Optional[float] = None
    """Mean train loss of the last completed epoch"""

    final_val_loss: Optional[float] = None
    """Mean validation loss of the last completed epoch"""

    seed: int = 0
    """Root seed of the run"""

    notes: Mapping[str, str] = dataclasses.field(default_factory=dict)
    """Free-form provenance, e.g. the split digest and the screening checkpoint digest"""

    def to_dict(self) -> Dict[str, Any]:
        return {'epochs': self.epochs, 'best_epoch': self.best_epoch, 'final_train_loss': self.final_train_loss,
                'final_val_loss': self.final_val_loss, 'seed': self.seed, 'notes': dict(self.notes)}

    @staticmethod
    def from_dict(d: Mapping[str, Any]) -> 'TrainingMeta':
        return TrainingMeta(epochs=int(d.get('epochs', 0)),
                            best_epoch=int(d.get('best_epoch', 0)),
                            final_train_loss=d.get('final_train_loss'),
                            final_val_loss=d.get('final_val_loss'),
                            seed=int(d.get('seed', 0)),
                            notes={str(k): str(v) for k, v in (d.get('notes') or {}).items()})


@dataclasses.dataclass(frozen=True, eq=False)
class ModelCheckpoint:
    """
    Named float32 tensors of one network plus what is needed to rebuild it.

    Tensors keep their insertion order, which is also the order of the binary blob.
    """

    arch_id: ArchID
    input_hw: Tuple[int, int]
    options: Mapping[str, Any]
    tensors: 'OrderedDict[str, np.ndarray]'
    meta: TrainingMeta = dataclasses.field(default_factory=TrainingMeta)

    def __post_init__(self) -> None:
        tensors: 'OrderedDict[str, np.ndarray]' = OrderedDict()
        for name, value in self.tensors.items():
            arr = np.array(value, dtype='<f4', copy=True, order='C')
            arr.setflags(write=False)
            tensors[name] = arr
        object.__setattr__(self, 'tensors', tensors)
        object.__setattr__(self, 'input_hw', (int(self.input_hw[0]), int(self.input_hw[1])))
        object.__setattr__(self, 'options', dict(self.options))
        if not isinstance(self.arch_id, ArchID):
            raise CheckpointError(f'unknown arch_id {self.arch_id}')

    @property
    def blob(self) -> bytes:
        """Little-endian float32 tensors, row-major, concatenated in tensor order"""
        return b''.join(t.tobytes() for t in self.tensors.values())

    @cached_property
    def digest(self) -> str:
        return hashlib.sha256(self.blob).hexdigest()

    @property
    def n_parameters(self) -> int:
        return int(sum(t.size for t in self.tensors.values()))
