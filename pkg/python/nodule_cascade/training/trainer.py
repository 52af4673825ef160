import dataclasses
import math
from collections import OrderedDict
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import structlog
import torch
from torch.utils.data import DataLoader, TensorDataset
from tqdm import trange

from .losses import bce_loss, class_cross_entropy
from .oversampling import oversample_benign
from ..interfaces import ArchID, ConfigError, FusedSample, ModelCheckpoint, ShapeMismatchError, SliceSample, \
    TrainingError, TrainingMeta, globals
from ..models import CascadeNet, checkpoint_from_model
from ..utils import named_rng, sha256_bytes, torch_generator

__all__ = ['TrainConfig', 'EpochRecord', 'TrainHistory', 'TrainingData', 'train_segmentation', 'train_classifier',
           'write_history', 'read_history']

_log = structlog.get_logger(__name__)

PathLike = Union[str, Path]
LossFn = Callable[[torch.Tensor, torch.Tensor], torch.Tensor]


@dataclasses.dataclass(frozen=True)
class TrainConfig:
    """Optimizer and loop settings shared by both training stages."""

    batch_size: int = 16
    """Samples per optimizer step"""

    learning_rate: float = 1e-4
    """Adam step size"""

    betas: Tuple[float, float] = (0.9, 0.999)
    """Adam moment decay rates"""

    eps: float = 1e-8
    """Adam epsilon"""

    epochs: int = 30
    """Number of passes over the training set"""

    seed: int = 0
    """Root seed of the batch order and dropout streams"""

    oversample_factor: int = 3
    """Total multiplicity of benign samples, classifier only"""

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ConfigError(f'batch_size must be >= 1, got {self.batch_size}')
        if not self.learning_rate > 0:
            raise ConfigError(f'learning_rate must be > 0, got {self.learning_rate}')
        if self.epochs < 0:
            raise ConfigError(f'epochs must be >= 0, got {self.epochs}')
        if self.oversample_factor < 1:
            raise ConfigError(f'oversample_factor must be >= 1, got {self.oversample_factor}')


@dataclasses.dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    """NaN without a validation set"""

    val_accuracy: float
    """NaN for the segmentation stage or without a validation set"""


@dataclasses.dataclass
class TrainHistory:
    records: List[EpochRecord] = dataclasses.field(default_factory=list)

    @property
    def train_losses(self) -> List[float]:
        return [r.train_loss for r in self.records]

    @property
    def val_losses(self) -> List[float]:
        return [r.val_loss for r in self.records]

    def __len__(self) -> int:
        return len(self.records)


@dataclasses.dataclass(frozen=True)
class TrainingData:
    train: Sequence[Union[SliceSample, FusedSample]]
    val: Sequence[Union[SliceSample, FusedSample]] = ()


def _segmentation_tensors(samples: Sequence[SliceSample]) -> Tuple[torch.Tensor, torch.Tensor]:
    if any(s.mask is None for s in samples):
        raise TrainingError('segmentation training needs a ground-truth mask on every slice')
    x = torch.from_numpy(np.stack([s.image for s in samples]).astype(np.float32)[:, None])
    t = torch.from_numpy(np.stack([s.mask for s in samples]).astype(np.float32))  # type: ignore
    return x, t


def _classifier_tensors(samples: Sequence[FusedSample]) -> Tuple[torch.Tensor, torch.Tensor]:
    for s in samples:
        if s.fused.channels.shape[0] != 2:
            raise ShapeMismatchError('classifier input channels', 2, s.fused.channels.shape[0])
        if s.case_label is None:
            raise TrainingError(f'classifier sample {s.series_uid}:{s.slice_index} has no label')
    x = torch.from_numpy(np.stack([s.fused.channels for s in samples]).astype(np.float32))
    t = torch.tensor([s.case_label.target for s in samples], dtype=torch.float32)  # type: ignore
    return x, t


def _evaluate(model: CascadeNet, loader: DataLoader, loss_fn: LossFn, classifier: bool) -> Tuple[float, float]:
    model.eval()
    total_loss, correct, n = 0., 0, 0
    with torch.no_grad():
        for xb, tb in loader:
            out = model(xb)
            total_loss += loss_fn(out, tb).item() * len(xb)
            if classifier:
                correct += int((out.argmax(dim=1) == tb.long()).sum().item())
            n += len(xb)
    return total_loss / n, (correct / n if classifier else math.nan)


def _fit(model: CascadeNet,
         train: Tuple[torch.Tensor, torch.Tensor],
         val: Optional[Tuple[torch.Tensor, torch.Tensor]],
         cfg: TrainConfig,
         loss_fn: LossFn,
         classifier: bool,
         desc: str) -> Tuple['OrderedDict[str, torch.Tensor]', int, TrainHistory]:
    n = len(train[0])
    if n == 0:
        raise TrainingError('empty training set')

    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate, betas=cfg.betas, eps=cfg.eps)
    train_loader = DataLoader(TensorDataset(*train), batch_size=cfg.batch_size, shuffle=True,
                              generator=torch_generator(named_rng(cfg.seed, 'batches')))
    val_loader = (DataLoader(TensorDataset(*val), batch_size=cfg.batch_size, shuffle=False)
                  if val is not None and len(val[0]) else None)
    model.set_dropout_generator(torch_generator(named_rng(cfg.seed, 'dropout')))

    best_state = OrderedDict((k, v.detach().clone()) for k, v in model.state_dict().items())
    best_epoch, best_loss = 0, math.inf
    history = TrainHistory()

    for epoch in trange(1, cfg.epochs + 1, desc=desc, disable=not globals.show_progress):
        model.train()
        total = 0.
        for step, (xb, tb) in enumerate(train_loader):
            optimizer.zero_grad()
            loss = loss_fn(model(xb), tb)
            if not torch.isfinite(loss):
                raise TrainingError(f'loss diverged to {loss.item()} at epoch {epoch}, step {step}')
            loss.backward()
            optimizer.step()
            total += loss.item() * len(xb)
        train_loss = total / n

        val_loss, val_accuracy = (_evaluate(model, val_loader, loss_fn, classifier) if val_loader is not None
                                  else (math.nan, math.nan))
        history.records.append(EpochRecord(epoch=epoch, train_loss=train_loss, val_loss=val_loss,
                                           val_accuracy=val_accuracy))
        _log.debug('epoch_done', stage=desc, epoch=epoch, train_loss=train_loss, val_loss=val_loss,
                   val_accuracy=val_accuracy)

        selection_loss = val_loss if val_loader is not None else train_loss
        if selection_loss < best_loss:
            best_loss, best_epoch = selection_loss, epoch
            best_state = OrderedDict((k, v.detach().clone()) for k, v in model.state_dict().items())

    model.set_dropout_generator(None)
    model.load_state_dict(best_state)
    model.eval()
    return best_state, best_epoch, history


def _meta(cfg: TrainConfig, best_epoch: int, history: TrainHistory, notes: Dict[str, str]) -> TrainingMeta:
    last = history.records[-1] if history.records else None
    return TrainingMeta(epochs=cfg.epochs,
                        best_epoch=best_epoch,
                        final_train_loss=None if last is None else float(last.train_loss),
                        final_val_loss=None if last is None or math.isnan(last.val_loss) else float(last.val_loss),
                        seed=cfg.seed,
                        notes=notes)


def train_segmentation(data: TrainingData,
                       model: CascadeNet,
                       cfg: TrainConfig,
                       notes: Optional[Dict[str, str]] = None) -> Tuple[ModelCheckpoint, TrainHistory]:
    """
    Train the screening network on slice samples by minimizing the mean pixel BCE with Adam.

    The weights of the epoch with the lowest validation loss (train loss without a validation set) are kept and
    loaded back into the model. Zero epochs return the initialization.

    :param data: train and validation SliceSamples with masks
    :param model: a segmentation network
    :param cfg: training configuration
    :param notes: provenance recorded in the checkpoint metadata
    :return: (best checkpoint, per-epoch history)
    """
    if model.arch_id != ArchID.UNET_SEG:
        raise TrainingError(f'train_segmentation needs a {ArchID.UNET_SEG.value} network, got {model.arch_id.value}')
    if len(data.train) == 0:
        raise TrainingError('empty training set')
    train = _segmentation_tensors(data.train)  # type: ignore
    val = _segmentation_tensors(data.val) if len(data.val) else None  # type: ignore

    _, best_epoch, history = _fit(model, train, val, cfg, bce_loss, classifier=False, desc='Training segmenter')
    ckpt = checkpoint_from_model(model, _meta(cfg, best_epoch, history, dict(notes or {})))
    _log.info('segmentation_trained', epochs=cfg.epochs, best_epoch=best_epoch, digest=ckpt.digest)
    return ckpt, history


def train_classifier(data: TrainingData,
                     seg_ckpt: ModelCheckpoint,
                     model: CascadeNet,
                     cfg: TrainConfig,
                     notes: Optional[Dict[str, str]] = None) -> Tuple[ModelCheckpoint, TrainHistory]:
    """
    Train a fused-input classifier on the 2-class cross entropy.

    Benign training samples are oversampled to cfg.oversample_factor copies; validation samples are used as given.
    The screening checkpoint is only recorded, its weights are never touched.

    :param data: labeled FusedSamples produced by screening and fusion
    :param seg_ckpt: screening checkpoint the fused inputs came from
    :param model: a classifier network
    :param cfg: training configuration
    :param notes: extra provenance recorded in the checkpoint metadata
    :return: (best checkpoint, per-epoch history)
    """
    if not model.arch_id.is_classifier:
        raise TrainingError(f'train_classifier needs a classifier network, got {model.arch_id.value}')
    if seg_ckpt.arch_id != ArchID.UNET_SEG:
        raise TrainingError(f'screening checkpoint must be {ArchID.UNET_SEG.value}, got {seg_ckpt.arch_id.value}')
    if len(data.train) == 0:
        raise TrainingError('empty training set: no suspicious training slices')
    seg_digest = seg_ckpt.digest

    train_samples = oversample_benign(data.train, cfg.oversample_factor, cfg.seed)
    train = _classifier_tensors(train_samples)  # type: ignore
    val = _classifier_tensors(data.val) if len(data.val) else None  # type: ignore

    _, best_epoch, history = _fit(model, train, val, cfg, class_cross_entropy, classifier=True,
                                  desc='Training classifier')

    assert sha256_bytes(seg_ckpt.blob) == seg_digest, 'screening weights changed during classifier training'
    all_notes = {'seg_digest': seg_digest, **(notes or {})}
    ckpt = checkpoint_from_model(model, _meta(cfg, best_epoch, history, all_notes))
    _log.info('classifier_trained', arch=model.arch_id.value, epochs=cfg.epochs, best_epoch=best_epoch,
              digest=ckpt.digest)
    return ckpt, history


def write_history(path: PathLike, history: TrainHistory) -> None:
    pd.DataFrame([dataclasses.astuple(r) for r in history.records],
                 columns=['epoch', 'train_loss', 'val_loss', 'val_accuracy']).to_csv(path, index=False)


def read_history(path: PathLike) -> TrainHistory:
    df = pd.read_csv(path, float_precision='round_trip')
    return TrainHistory([EpochRecord(epoch=int(r.epoch), train_loss=float(r.train_loss), val_loss=float(r.val_loss),
                                     val_accuracy=float(r.val_accuracy)) for r in df.itertuples(index=False)])
