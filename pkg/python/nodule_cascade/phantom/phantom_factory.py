import dataclasses
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Tuple, Union

import numpy as np
import structlog
import yaml

from .phantom_spec import PhantomSpec
from ..annotations import write_annotations, write_case_labels
from ..interfaces import CaseLabel, CtVolume, MaskVolume, NoduleAnnotation
from ..utils import named_rng, ordered_map, sha256_bytes, sha256_file, shallow_asdict
from ..volume import save_mask, save_volume

__all__ = ['PhantomCase', 'DatasetManifest', 'MANIFEST_FILE', 'SPIKE_SHARPNESS', 'case_uid',
           'generate_phantom_volume', 'generate_phantom_dataset', 'load_manifest']

_log = structlog.get_logger(__name__)

MANIFEST_FILE = 'manifest.yaml'

SPIKE_SHARPNESS = 8
"""Exponent narrowing each spike around its direction"""

_N_SPIKES_RANGE = (6, 12)

PathLike = Union[str, Path]


class PhantomCase(NamedTuple):
    volume: CtVolume
    mask: MaskVolume
    annotation: NoduleAnnotation
    label: CaseLabel


@dataclasses.dataclass(frozen=True)
class DatasetManifest:
    """Every file of a generated dataset with its sha256 content digest."""

    spec: Dict[str, Any]
    labels_only: bool
    files: Dict[str, str]
    """Relative path to sha256, sorted by path"""

    @property
    def digest(self) -> str:
        """Digest over the sorted (path, file digest) listing"""
        return sha256_bytes(''.join(f'{p} {d}\n' for p, d in sorted(self.files.items())).encode('utf-8'))

    def to_dict(self) -> Dict[str, Any]:
        return {'spec': self.spec, 'labels_only': self.labels_only, 'files': dict(sorted(self.files.items())),
                'digest': self.digest}


def case_uid(index: int) -> str:
    return f'phantom_{index:04d}'


def generate_phantom_volume(spec: PhantomSpec,
                            rng: np.random.Generator,
                            label: Optional[CaseLabel] = None,
                            series_uid: str = case_uid(0)) -> PhantomCase:
    """
    Generate one CT-like volume holding a single nodule.

    Benign nodules are balls. Malignant nodules are balls whose radius is modulated per direction by a few narrow
    spikes, r(u) = r * (1 + a * max_k max(0, u . v_k) ** SPIKE_SHARPNESS). Spike directions are drawn for both
    labels so the random stream is consumed identically.

    :param spec: phantom parameters
    :param rng: random stream of this case
    :param label: case label, drawn from rng when None
    :param series_uid: series identifier recorded in the annotation
    :return: PhantomCase(volume, mask, annotation, label)
    """
    spec.check_fits()
    if label is None:
        label = CaseLabel.from_target(int(rng.integers(2)))

    nx, ny, nz = spec.dims
    spacing = np.asarray(spec.spacing)
    origin = (0., 0., 0.)

    d_lo, d_hi = spec.diameter_range(label)
    diameter = float(rng.uniform(d_lo, d_hi))
    radius = diameter / 2
    extent = np.asarray(spec.extent_mm)
    center = rng.uniform(diameter, extent - diameter)

    n_spikes = int(rng.integers(_N_SPIKES_RANGE[0], _N_SPIKES_RANGE[1] + 1))
    directions = rng.normal(size=(n_spikes, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    amplitude = spec.spiculation_amplitude if label == CaseLabel.MALIGNANT else 0.

    background = rng.normal(spec.background_mean, spec.background_noise_sd, size=(nz, ny, nx))

    reach = radius * (1 + amplitude)
    lo = np.maximum(np.floor((center - reach) / spacing).astype(np.int64) - 1, 0)
    hi = np.minimum(np.ceil((center + reach) / spacing).astype(np.int64) + 1, np.array([nx, ny, nz]) - 1)
    dx, dy, dz = (np.arange(lo[k], hi[k] + 1) * spacing[k] - center[k] for k in range(3))
    offsets = np.stack(np.broadcast_arrays(dx[None, None, :], dy[None, :, None], dz[:, None, None]), axis=-1)
    dist2 = dx[None, None, :] ** 2 + dy[None, :, None] ** 2 + dz[:, None, None] ** 2
    dist = np.sqrt(dist2)
    with np.errstate(invalid='ignore', divide='ignore'):
        unit = np.where(dist[..., None] > 0, offsets / dist[..., None], 0.)
    spikes = np.max(np.clip(unit @ directions.T, 0., None) ** SPIKE_SHARPNESS, axis=-1)
    local_radius = radius * (1 + amplitude * spikes)
    inside = dist2 <= local_radius * local_radius

    mask = np.zeros((nz, ny, nx), dtype=np.uint8)
    box = (slice(lo[2], hi[2] + 1), slice(lo[1], hi[1] + 1), slice(lo[0], hi[0] + 1))
    mask[box] = inside

    voxels = background
    n_inside = int(np.count_nonzero(mask))
    voxels[mask.astype(bool)] = rng.normal(spec.nodule_intensity_mean, spec.nodule_intensity_sd, size=n_inside)
    voxels = np.clip(np.rint(voxels), np.iinfo(np.int16).min, np.iinfo(np.int16).max).astype(np.int16)

    annotation = NoduleAnnotation(series_uid=series_uid, center_world=tuple(center.tolist()),  # type: ignore
                                  diameter_mm=diameter)
    return PhantomCase(volume=CtVolume(voxels=voxels, origin=origin, spacing=spec.spacing),
                       mask=MaskVolume(voxels=mask, origin=origin, spacing=spec.spacing),
                       annotation=annotation,
                       label=label)


def _write_case(job: Tuple[PhantomSpec, int, str, bool]) -> Tuple[NoduleAnnotation, CaseLabel]:
    spec, index, out_dir, labels_only = job
    uid = case_uid(index)
    case = generate_phantom_volume(spec, named_rng(spec.seed, 'phantom', index), spec.label_of(index), uid)
    save_volume(Path(out_dir) / 'volumes' / f'{uid}.mhd', case.volume)
    if not labels_only:
        save_mask(Path(out_dir) / 'masks' / f'{uid}.mhd', case.mask)
    return case.annotation, case.label


def _spec_echo(spec: PhantomSpec) -> Dict[str, Any]:
    return {k: list(v) if isinstance(v, tuple) else v for k, v in shallow_asdict(spec).items()}


def generate_phantom_dataset(spec: PhantomSpec,
                             out_dir: PathLike,
                             labels_only: bool = False,
                             workers: int = 1) -> DatasetManifest:
    """
    Write a labeled phantom dataset.

    Layout: volumes/<uid>.mhd, masks/<uid>.mhd, annotations.csv, labels.csv and manifest.yaml. With labels_only the
    masks and the annotation table are left out, leaving an unlabeled target set whose only ground truth is the
    case label.

    :param spec: phantom parameters
    :param out_dir: output directory, created if missing
    :param labels_only: skip masks and annotations
    :param workers: number of worker processes, output bytes do not depend on it
    :return: the DatasetManifest, also written to manifest.yaml
    """
    spec.check_fits()
    out = Path(out_dir)
    (out / 'volumes').mkdir(parents=True, exist_ok=True)
    if not labels_only:
        (out / 'masks').mkdir(parents=True, exist_ok=True)

    jobs = [(spec, i, str(out), labels_only) for i in range(spec.n_cases)]
    results = ordered_map(_write_case, jobs, workers=workers, desc='Generating phantoms')

    labels = {case_uid(i): label for i, (_, label) in enumerate(results)}
    write_case_labels(out / 'labels.csv', labels)
    if not labels_only:
        write_annotations(out / 'annotations.csv', [annotation for annotation, _ in results])

    written = [out / 'labels.csv']
    for i in range(spec.n_cases):
        written += [out / 'volumes' / f'{case_uid(i)}.mhd', out / 'volumes' / f'{case_uid(i)}.raw']
        if not labels_only:
            written += [out / 'masks' / f'{case_uid(i)}.mhd', out / 'masks' / f'{case_uid(i)}.raw']
    if not labels_only:
        written.append(out / 'annotations.csv')
    files = {p.relative_to(out).as_posix(): sha256_file(p) for p in sorted(written)}
    manifest = DatasetManifest(spec=_spec_echo(spec), labels_only=labels_only, files=files)
    with open(out / MANIFEST_FILE, 'w') as f:
        yaml.safe_dump(manifest.to_dict(), f, sort_keys=False)
    _log.info('phantom_dataset_written', out=str(out), cases=spec.n_cases, digest=manifest.digest)
    return manifest


def load_manifest(out_dir: PathLike) -> DatasetManifest:
    with open(Path(out_dir) / MANIFEST_FILE) as f:
        d = yaml.safe_load(f)
    return DatasetManifest(spec=d['spec'], labels_only=bool(d['labels_only']), files=dict(d['files']))
