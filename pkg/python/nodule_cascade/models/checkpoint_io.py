import hashlib
from collections import OrderedDict
from pathlib import Path
from typing import Mapping, Optional, Union

import numpy as np
import structlog
import torch
import yaml

from .model_factory import ModelFactory
from .networks import CascadeNet
from ..interfaces import ArchID, CheckpointError, ModelCheckpoint, TrainingMeta

__all__ = ['CHECKPOINT_MANIFEST', 'CHECKPOINT_BLOB', 'checkpoint_from_model', 'load_tensors', 'model_from_checkpoint',
           'save_checkpoint', 'load_checkpoint']

_log = structlog.get_logger(__name__)

CHECKPOINT_MANIFEST = 'checkpoint.yaml'
CHECKPOINT_BLOB = 'checkpoint.bin'
_FORMAT_VERSION = 1

PathLike = Union[str, Path]


def checkpoint_from_model(model: CascadeNet, meta: Optional[TrainingMeta] = None) -> ModelCheckpoint:
    tensors = OrderedDict((name, p.detach().cpu().numpy()) for name, p in model.named_parameters())
    return ModelCheckpoint(arch_id=model.arch_id, input_hw=model.input_hw, options=model.options(),
                           tensors=tensors, meta=meta or TrainingMeta())


def load_tensors(model: CascadeNet, tensors: Mapping[str, np.ndarray]) -> CascadeNet:
    """
    Copy named tensors into a model's parameters.

    Every parameter must be present with the same shape and no extra tensor may be left over.

    :param model: target network
    :param tensors: name to array mapping
    :return: the model, in inference mode
    """
    params = dict(model.named_parameters())
    for name, p in params.items():
        if name not in tensors:
            raise CheckpointError(f'checkpoint is missing tensor {name}')
        if tuple(tensors[name].shape) != tuple(p.shape):
            raise CheckpointError(f'tensor {name} has shape {tuple(tensors[name].shape)}, '
                                  f'model expects {tuple(p.shape)}')
    extra = [name for name in tensors if name not in params]
    if extra:
        raise CheckpointError(f'checkpoint holds tensors unknown to {model.arch_id.value}: {extra}')

    with torch.no_grad():
        for name, p in params.items():
            p.copy_(torch.from_numpy(np.array(tensors[name], dtype=np.float32)))
    return model.eval()


def model_from_checkpoint(checkpoint: ModelCheckpoint) -> CascadeNet:
    model = ModelFactory.build(checkpoint.arch_id, checkpoint.input_hw, **checkpoint.options)
    return load_tensors(model, checkpoint.tensors)


def save_checkpoint(model: Union[CascadeNet, ModelCheckpoint], path: PathLike,
                    meta: Optional[TrainingMeta] = None) -> ModelCheckpoint:
    """
    Write a checkpoint directory holding checkpoint.yaml (human readable manifest) and checkpoint.bin (little-endian
    float32 tensors, row-major, concatenated in manifest order).

    :param model: a network or an existing checkpoint
    :param path: checkpoint directory, created if missing
    :param meta: training metadata, replaces the checkpoint's own when given
    :return: the saved checkpoint
    """
    if isinstance(model, ModelCheckpoint):
        ckpt = model if meta is None else ModelCheckpoint(model.arch_id, model.input_hw, model.options,
                                                          model.tensors, meta)
    else:
        ckpt = checkpoint_from_model(model, meta)

    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    offset = 0
    for name, t in ckpt.tensors.items():
        entries.append({'name': name, 'shape': list(t.shape), 'offset': offset, 'nbytes': int(t.nbytes)})
        offset += t.nbytes

    manifest = {'format_version': _FORMAT_VERSION,
                'arch_id': ckpt.arch_id.value,
                'input_hw': list(ckpt.input_hw),
                'options': dict(ckpt.options),
                'blob': CHECKPOINT_BLOB,
                'blob_sha256': ckpt.digest,
                'tensors': entries,
                'training_meta': ckpt.meta.to_dict()}
    (out / CHECKPOINT_BLOB).write_bytes(ckpt.blob)
    with open(out / CHECKPOINT_MANIFEST, 'w') as f:
        yaml.safe_dump(manifest, f, sort_keys=False)
    _log.info('checkpoint_saved', path=str(out), arch=ckpt.arch_id.value, digest=ckpt.digest)
    return ckpt


def load_checkpoint(path: PathLike) -> ModelCheckpoint:
    """
    Read a checkpoint directory (or its checkpoint.yaml). The blob digest is verified before anything else.

    :param path: checkpoint directory or manifest file
    :return: the ModelCheckpoint
    """
    path = Path(path)
    manifest_path = path if path.is_file() else path / CHECKPOINT_MANIFEST
    with open(manifest_path) as f:
        manifest = yaml.safe_load(f)
    if not isinstance(manifest, dict) or 'blob_sha256' not in manifest:
        raise CheckpointError(f'{manifest_path}: not a checkpoint manifest')

    blob = (manifest_path.parent / manifest.get('blob', CHECKPOINT_BLOB)).read_bytes()
    if hashlib.sha256(blob).hexdigest() != manifest['blob_sha256']:
        raise CheckpointError(f'{manifest_path}: digest mismatch, the tensor blob is corrupted')

    try:
        arch_id = ArchID(manifest['arch_id'])
    except ValueError:
        raise CheckpointError(f'{manifest_path}: unknown arch_id {manifest["arch_id"]!r}') from None

    tensors: 'OrderedDict[str, np.ndarray]' = OrderedDict()
    for entry in manifest['tensors']:
        shape = tuple(int(s) for s in entry['shape'])
        offset, nbytes = int(entry['offset']), int(entry['nbytes'])
        if nbytes != 4 * int(np.prod(shape, dtype=np.int64)) or offset + nbytes > len(blob):
            raise CheckpointError(f'{manifest_path}: tensor {entry["name"]} does not match its shape {shape}')
        tensors[entry['name']] = np.frombuffer(blob, dtype='<f4', count=nbytes // 4, offset=offset).reshape(shape)

    return ModelCheckpoint(arch_id=arch_id,
                           input_hw=tuple(manifest['input_hw']),  # type: ignore
                           options=manifest.get('options') or {},
                           tensors=tensors,
                           meta=TrainingMeta.from_dict(manifest.get('training_meta') or {}))
