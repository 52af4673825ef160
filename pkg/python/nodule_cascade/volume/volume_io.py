from pathlib import Path
from typing import Dict, Sequence, Tuple, Type, TypeVar, Union

import numpy as np
import structlog

from ..interfaces import CtVolume, DEFAULT_HU_WINDOW, GridVolume, MaskVolume, NormalizedVolume, Vec3, \
    VolumeFormatError

__all__ = ['load_volume', 'load_mask', 'save_volume', 'save_mask', 'world_to_voxel', 'voxel_to_world',
           'normalize_hu']

_log = structlog.get_logger(__name__)

_REQUIRED_KEYS = ('DimSize', 'ElementSpacing', 'Offset', 'ElementDataFile')
_ELEMENT_TYPES: Dict[str, str] = {'int16': '<i2', 'uint8': 'u1'}

_V = TypeVar('_V', bound=GridVolume)
PathLike = Union[str, Path]


def _parse_header(path: Path) -> Dict[str, str]:
    header: Dict[str, str] = {}
    for line_no, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        key, sep, value = line.partition('=')
        key = key.strip()
        if not sep or not key:
            raise VolumeFormatError(f'{path}:{line_no}: expected "Key = Value", got {line!r}')
        if key not in _REQUIRED_KEYS and key != 'ElementType':
            raise VolumeFormatError(f'{path}:{line_no}: unknown header key {key!r}')
        if key in header:
            raise VolumeFormatError(f'{path}:{line_no}: duplicate header key {key!r}')
        header[key] = value.strip()

    missing = [k for k in _REQUIRED_KEYS if k not in header]
    if missing:
        raise VolumeFormatError(f'{path}: missing header keys {missing}')
    return header


def _triple(path: Path, key: str, value: str, cast: Type) -> Tuple:
    parts = value.split()
    if len(parts) != 3:
        raise VolumeFormatError(f'{path}: {key} needs three values, got {value!r}')
    try:
        return tuple(cast(p) for p in parts)
    except ValueError:
        raise VolumeFormatError(f'{path}: malformed {key} value {value!r}') from None


def _read_grid(path: PathLike, element_type: str, volume_type: Type[_V]) -> _V:
    path = Path(path)
    header = _parse_header(path)

    found_type = header.get('ElementType', 'int16')
    if found_type != element_type:
        raise VolumeFormatError(f'{path}: expected ElementType {element_type}, found {found_type}')

    nx, ny, nz = _triple(path, 'DimSize', header['DimSize'], int)
    spacing = _triple(path, 'ElementSpacing', header['ElementSpacing'], float)
    origin = _triple(path, 'Offset', header['Offset'], float)
    if min(nx, ny, nz) < 1:
        raise VolumeFormatError(f'{path}: DimSize components must be >= 1, got {(nx, ny, nz)}')

    raw = (path.parent / header['ElementDataFile']).read_bytes()
    dtype = np.dtype(_ELEMENT_TYPES[element_type])
    expected = dtype.itemsize * nx * ny * nz
    if len(raw) != expected:
        raise VolumeFormatError(f'{path}: raw size mismatch, expected {expected} bytes, found {len(raw)}')

    voxels = np.frombuffer(raw, dtype=dtype).reshape(nz, ny, nx)
    _log.debug('volume_loaded', path=str(path), dims=(nx, ny, nz))
    return volume_type(voxels=voxels, origin=origin, spacing=spacing)


def _write_grid(path: PathLike, volume: GridVolume, element_type: str) -> None:
    path = Path(path)
    raw_name = path.with_suffix('.raw').name
    nx, ny, nz = volume.dims
    lines = [f'DimSize = {nx} {ny} {nz}',
             'ElementSpacing = ' + ' '.join(repr(s) for s in volume.spacing),
             'Offset = ' + ' '.join(repr(o) for o in volume.origin),
             f'ElementType = {element_type}',
             f'ElementDataFile = {raw_name}']
    path.parent.mkdir(parents=True, exist_ok=True)
    (path.parent / raw_name).write_bytes(volume.voxels.astype(_ELEMENT_TYPES[element_type]).tobytes())
    path.write_text('\n'.join(lines) + '\n')


def load_volume(path: PathLike) -> CtVolume:
    """
    Load a CT volume from a text header and its little-endian int16 raw companion.

    :param path: path of the header file
    :return: the CtVolume
    """
    return _read_grid(path, 'int16', CtVolume)


def load_mask(path: PathLike) -> MaskVolume:
    """Load a mask volume written by save_mask (ElementType = uint8)."""
    return _read_grid(path, 'uint8', MaskVolume)


def save_volume(path: PathLike, volume: CtVolume) -> None:
    _write_grid(path, volume, 'int16')


def save_mask(path: PathLike, mask: MaskVolume) -> None:
    _write_grid(path, mask, 'uint8')


def world_to_voxel(volume: GridVolume, p: Sequence[float]) -> Vec3:
    """Continuous voxel coordinate (x, y, z) of a world point, unrounded and unclamped."""
    v = (np.asarray(p, dtype=np.float64) - np.asarray(volume.origin)) / np.asarray(volume.spacing)
    return float(v[0]), float(v[1]), float(v[2])


def voxel_to_world(volume: GridVolume, v: Sequence[float]) -> Vec3:
    p = np.asarray(volume.origin) + np.asarray(v, dtype=np.float64) * np.asarray(volume.spacing)
    return float(p[0]), float(p[1]), float(p[2])


def normalize_hu(volume: CtVolume, lo: float = DEFAULT_HU_WINDOW.lo, hi: float = DEFAULT_HU_WINDOW.hi) \
        -> NormalizedVolume:
    """
    Window intensities onto [0, 1]: v maps to clamp((v - lo) / (hi - lo), 0, 1).

    :param volume: source volume
    :param lo: intensity mapped to 0
    :param hi: intensity mapped to 1
    :return: a NormalizedVolume on the same grid
    """
    if not lo < hi:
        raise ValueError(f'normalize_hu needs lo < hi, got lo={lo}, hi={hi}')
    scaled = (volume.voxels.astype(np.float64) - lo) / (hi - lo)
    return NormalizedVolume(voxels=np.clip(scaled, 0., 1.).astype(np.float32),
                            origin=volume.origin, spacing=volume.spacing)
