import math
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import structlog

from .screening import Aggregation, DEFAULT_THRESHOLD, ModelLike, ScreenOpts, _predict, binarize, fuse_inputs, \
    materialize, screen_slices
from ..annotations import extract_slice_samples
from ..interfaces import ArchID, CaseLabel, CaseVerdict, CheckpointError, CtVolume, FusedSample, ModelCheckpoint, \
    NormalizedVolume, ScreenResult
from ..models import CascadeNet, load_tensors
from ..volume import normalize_hu

__all__ = ['CLASSIFIER_ARCHS', 'LabeledCase', 'CascadeOutput', 'transfer_weights', 'aggregate', 'run_cascade',
           'run_cascade_normalized', 'assemble_classifier_samples', 'write_verdicts', 'read_verdicts',
           'write_slice_probabilities', 'read_slice_probabilities']

_log = structlog.get_logger(__name__)

CLASSIFIER_ARCHS = [ArchID.CASCADE_CLS, ArchID.BASELINE_FC, ArchID.BASELINE_ENCDEC]

PathLike = Union[str, Path]

VERDICT_COLUMNS = ['seriesuid', 'case_score', 'label', 'n_suspicious_slices', 'no_findings']


class LabeledCase(NamedTuple):
    series_uid: str
    volume: NormalizedVolume
    label: Optional[CaseLabel]


class CascadeOutput(NamedTuple):
    verdict: CaseVerdict
    screen: List[ScreenResult]


def transfer_weights(seg_ckpt: ModelCheckpoint, target_model: CascadeNet) -> CascadeNet:
    """
    Load a trained screening checkpoint into a freshly built network, matching tensors by name.

    :param seg_ckpt: checkpoint of the trained network
    :param target_model: network of the same architecture
    :return: the target model, in inference mode
    """
    if seg_ckpt.arch_id != target_model.arch_id:
        raise CheckpointError(f'arch mismatch: checkpoint is {seg_ckpt.arch_id.value}, '
                              f'model is {target_model.arch_id.value}')
    return load_tensors(target_model, seg_ckpt.tensors)


def aggregate(slice_probs: Sequence[Tuple[int, float]], aggregation: Aggregation = Aggregation.MEAN) -> float:
    """
    Case score from (slice_index, malignant probability) pairs; 0 when there is no pair.

    Pairs are summed in slice order, so the score does not depend on the order they were produced in.
    """
    if not slice_probs:
        return 0.
    ordered = [p for _, p in sorted(slice_probs)]
    if aggregation == Aggregation.MAJORITY:
        return sum(1 for p in ordered if p >= 0.5) / len(ordered)
    return min(1., max(0., math.fsum(ordered) / len(ordered)))


def _classify(cls_net: CascadeNet, fused: Sequence[np.ndarray], batch_size: int) -> np.ndarray:
    if not fused:
        return np.zeros((0, 2), dtype=np.float32)
    return _predict(cls_net, np.stack(fused).astype(np.float32), batch_size)


def _fused_channels(norm: NormalizedVolume, result: ScreenResult, opts: ScreenOpts) -> np.ndarray:
    prob_map = binarize(result.prob_map) if opts.binarize else result.prob_map
    return fuse_inputs(norm.voxels[result.slice_index], prob_map).channels


def run_cascade_normalized(seg: ModelLike,
                           cls: ModelLike,
                           norm: NormalizedVolume,
                           series_uid: str = '',
                           threshold: float = DEFAULT_THRESHOLD,
                           opts: ScreenOpts = ScreenOpts()) -> CascadeOutput:
    """Cascade on an already normalized volume; also returns the per-slice screening results."""
    seg_net = materialize(seg, [ArchID.UNET_SEG])
    cls_net = materialize(cls, CLASSIFIER_ARCHS)

    slices = extract_slice_samples(norm, None, range(norm.nz), series_uid=series_uid)
    screen = screen_slices(seg_net, slices, threshold, opts.batch_size)
    suspicious = [r for r in screen if r.suspicious]

    probs = _classify(cls_net, [_fused_channels(norm, r, opts) for r in suspicious], opts.batch_size)
    slice_probs = tuple((r.slice_index, float(probs[i, 1])) for i, r in enumerate(suspicious))
    score = aggregate(slice_probs, opts.aggregation)
    verdict = CaseVerdict(series_uid=series_uid,
                          slice_probs=slice_probs,
                          case_score=score,
                          predicted_label=CaseLabel.MALIGNANT if score >= 0.5 else CaseLabel.BENIGN,
                          n_suspicious_slices=len(suspicious),
                          no_findings=not suspicious)
    _log.debug('case_screened', series=series_uid, suspicious=len(suspicious), score=score)
    return CascadeOutput(verdict=verdict, screen=screen)


def run_cascade(seg: ModelLike,
                cls: ModelLike,
                volume: CtVolume,
                threshold: float = DEFAULT_THRESHOLD,
                series_uid: str = '',
                opts: ScreenOpts = ScreenOpts()) -> CaseVerdict:
    """
    Normalize a volume, screen every slice, fuse and classify the suspicious ones and aggregate a case verdict.

    Without any suspicious slice the verdict is benign with score 0 and no_findings set.

    :param seg: screening checkpoint or network
    :param cls: classifier checkpoint or network
    :param volume: CT volume whose slices match the networks' input size
    :param threshold: discriminator threshold
    :param series_uid: series identifier carried into the verdict
    :param opts: window, aggregation rule, binarization and batch size
    :return: the CaseVerdict
    """
    norm = normalize_hu(volume, opts.window.lo, opts.window.hi)
    return run_cascade_normalized(seg, cls, norm, series_uid, threshold, opts).verdict


def assemble_classifier_samples(seg: ModelLike,
                                cases: Sequence[LabeledCase],
                                threshold: float = DEFAULT_THRESHOLD,
                                opts: ScreenOpts = ScreenOpts()) -> List[FusedSample]:
    """
    Build classifier training samples: screen every slice of every case, drop the non-suspicious slices, fuse the
    rest with their probability maps and attach the case label.

    :param seg: screening checkpoint or network
    :param cases: normalized volumes with their labels
    :param threshold: discriminator threshold
    :param opts: binarization and batch size
    :return: labeled FusedSamples
    """
    seg_net = materialize(seg, [ArchID.UNET_SEG])
    samples: List[FusedSample] = []
    for case in cases:
        slices = extract_slice_samples(case.volume, None, range(case.volume.nz), label=case.label,
                                       series_uid=case.series_uid)
        for r in screen_slices(seg_net, slices, threshold, opts.batch_size):
            if not r.suspicious:
                continue
            prob_map = binarize(r.prob_map) if opts.binarize else r.prob_map
            samples.append(FusedSample(fused=fuse_inputs(case.volume.voxels[r.slice_index], prob_map),
                                       series_uid=case.series_uid,
                                       slice_index=r.slice_index,
                                       case_label=case.label))
    _log.info('classifier_samples_assembled', cases=len(cases), samples=len(samples))
    return samples


def write_verdicts(path: PathLike, verdicts: Sequence[CaseVerdict]) -> None:
    pd.DataFrame([(v.series_uid, repr(v.case_score), v.predicted_label.value, v.n_suspicious_slices,
                   int(v.no_findings)) for v in verdicts], columns=VERDICT_COLUMNS).to_csv(path, index=False)


def read_verdicts(path: PathLike,
                  slice_probs: Optional[Dict[str, List[Tuple[int, float]]]] = None) -> List[CaseVerdict]:
    """Read verdicts.csv back, optionally attaching per-slice probabilities read by read_slice_probabilities."""
    df = pd.read_csv(path, dtype={'seriesuid': str}, float_precision='round_trip')
    slice_probs = slice_probs or {}
    return [CaseVerdict(series_uid=r.seriesuid,
                        slice_probs=tuple(slice_probs.get(r.seriesuid, [])),
                        case_score=float(r.case_score),
                        predicted_label=CaseLabel(r.label),
                        n_suspicious_slices=int(r.n_suspicious_slices),
                        no_findings=bool(r.no_findings)) for r in df.itertuples(index=False)]


def write_slice_probabilities(path: PathLike, verdicts: Sequence[CaseVerdict]) -> None:
    pd.DataFrame([(v.series_uid, i, repr(p)) for v in verdicts for i, p in v.slice_probs],
                 columns=['seriesuid', 'slice_index', 'p_malignant']).to_csv(path, index=False)


def read_slice_probabilities(path: PathLike) -> Dict[str, List[Tuple[int, float]]]:
    df = pd.read_csv(path, dtype={'seriesuid': str}, float_precision='round_trip')
    out: Dict[str, List[Tuple[int, float]]] = {}
    for uid, i, p in zip(df['seriesuid'], df['slice_index'], df['p_malignant']):
        out.setdefault(uid, []).append((int(i), float(p)))
    return out
