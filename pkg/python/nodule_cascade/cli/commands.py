import argparse
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from cachetools import LRUCache, cached

from .run_config import RunConfig
from ..annotations import DEFAULT_PAD, MaskShape, extract_slice_samples, filter_findings, parse_annotations, \
    parse_case_labels, rasterize_mask, select_slices, write_slice_indices
from ..cascade import CLASSIFIER_ARCHS, LabeledCase, ScreenOpts, assemble_classifier_samples, \
    run_cascade_normalized, screen_slices, write_screen_results, write_slice_probabilities, write_verdicts
from ..data import H5ProbMapLoader, H5ProbMapSaver, ProbMapRecord
from ..evaluation import Averaging, EvalLevel, NetworkRun, RocKind, compare_networks, pixel_roc, write_report, \
    write_roc_points
from ..interfaces import ArchID, CascadeError, CaseVerdict, ConfigError, HUWindow, ModelCheckpoint, \
    NormalizedVolume, ScreenResult, SliceSample
from ..models import ModelFactory, UpsampleMode, build_segmentation_net, expected_parameter_count, layer_table, \
    load_checkpoint, save_checkpoint
from ..phantom import generate_phantom_dataset
from ..training import CLASSIFIER_SPLIT, DatasetSplit, SEGMENTATION_SPLIT, SplitUnit, TrainingData, read_split, \
    split_dataset, split_digest, train_classifier, train_segmentation, write_history, write_split
from ..utils import ordered_map
from ..volume import load_mask, load_volume, normalize_hu, save_mask

__all__ = ['cmd_gen_phantom', 'cmd_build_masks', 'cmd_train_seg', 'cmd_screen', 'cmd_train_cls', 'cmd_infer',
           'cmd_eval', 'cmd_describe']

_log = structlog.get_logger(__name__)

_SUBSET_CHOICES = ('train', 'val', 'test', 'all')

_DEFAULT_WIDTH = {ArchID.UNET_SEG: 64, ArchID.BASELINE_ENCDEC: 8}


def _data_path(cfg: RunConfig, key: str, name: str, required: bool = True) -> Any:
    data = cfg.get_path('data')
    return cfg.get_path(key, default=data / name if data is not None else None, required=required)


def _out_dir(cfg: RunConfig) -> Path:
    out = cfg.get_path('out', required=True)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _series_in(volumes_dir: Path) -> List[str]:
    if not volumes_dir.is_dir():
        raise CascadeError(f'volume directory {volumes_dir} not found')
    return sorted(p.stem for p in volumes_dir.glob('*.mhd'))


def _restrict(cfg: RunConfig, uids: Sequence[str]) -> List[str]:
    """Keep the series of one subset of a split file when --split is given"""
    split_path = cfg.get_path('split')
    subset = cfg.get_str('subset')
    if split_path is None:
        if subset is not None:
            raise ConfigError('--subset needs --split')
        return list(uids)
    subset = subset or 'all'
    if subset not in _SUBSET_CHOICES:
        raise ConfigError(f'subset must be one of {_SUBSET_CHOICES}, got {subset}')
    split = read_split(split_path)
    allowed = set(split.train + split.val + split.test) if subset == 'all' else set(getattr(split, subset))
    return [u for u in uids if u in allowed]


def _arch_options(cfg: RunConfig, arch: ArchID) -> Dict[str, Any]:
    if arch == ArchID.BASELINE_FC:
        return {}
    options: Dict[str, Any] = {'dropout': cfg.get_float('dropout', 0.5)}
    if arch in _DEFAULT_WIDTH:
        options['width'] = cfg.get_int('width', _DEFAULT_WIDTH[arch])
        options['upsample'] = cfg.get_enum('upsample', UpsampleMode, UpsampleMode.NEAREST)
    return options


@cached(cache=LRUCache(maxsize=8), key=lambda path: str(Path(path).resolve()))
def _checkpoint(path: str) -> ModelCheckpoint:
    return load_checkpoint(path)


def _normalized(volumes_dir: Path, uid: str, window: HUWindow) -> NormalizedVolume:
    return normalize_hu(load_volume(volumes_dir / f'{uid}.mhd'), window.lo, window.hi)


def _take_split(cfg: RunConfig, uids: Sequence[str], default_fractions: Tuple[float, float, float],
                unit: SplitUnit) -> DatasetSplit:
    """Reuse --split when given, otherwise split the series under the run seed"""
    split_path = cfg.get_path('split')
    if split_path is not None:
        split = read_split(split_path)
        known = set(uids)
        return DatasetSplit(*[[u for u in part if u in known] for part in split])
    return split_dataset(list(uids), cfg.split_config(default_fractions, unit))


def _cls_paths(cfg: RunConfig) -> List[Path]:
    raw = cfg.get_str('cls_ckpt', required=True)
    return [Path(p) for p in raw.split(',') if p]


def _print(text: str) -> None:
    print(text, flush=True)


def cmd_gen_phantom(args: argparse.Namespace, cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    spec = cfg.phantom_spec()
    try:
        spec.check_fits()
    except ValueError as e:
        raise ConfigError(str(e)) from e
    manifest = generate_phantom_dataset(spec, out, labels_only=cfg.get_bool('labels_only'),
                                        workers=cfg.get_int('workers', 1))
    cfg.echo(out, 'gen-phantom')
    _print(manifest.digest)
    return 0


def _mask_job(job: Tuple[str, str, list, str, int]) -> List[int]:
    vol_path, out_path, findings, shape, pad = job
    mask = rasterize_mask(load_volume(vol_path), findings, MaskShape(shape))
    save_mask(out_path, mask)
    return select_slices(mask, pad)


def cmd_build_masks(args: argparse.Namespace, cfg: RunConfig) -> int:
    volumes = _data_path(cfg, 'volumes', 'volumes')
    annotations = _data_path(cfg, 'annotations', 'annotations.csv')
    out = _out_dir(cfg)
    pad = cfg.get_int('pad', DEFAULT_PAD)
    if pad < 0:
        raise ConfigError(f'pad must be >= 0, got {pad}')
    shape = cfg.get_enum('mask_shape', MaskShape, MaskShape.BALL)
    min_diameter = cfg.get_float('min_diameter')
    strict = cfg.get_bool('strict')

    findings = parse_annotations(annotations)
    available = set(_series_in(volumes))
    orphans = sorted({f.series_uid for f in findings} - available)
    for uid in orphans:
        if strict:
            raise CascadeError(f'annotated series {uid} has no volume in {volumes}')
        _log.warning('annotation_without_volume', series=uid)

    uids = _restrict(cfg, sorted({f.series_uid for f in findings} & available))
    jobs = []
    for uid in uids:
        kept = filter_findings(findings, uid, min_diameter)
        if kept:
            jobs.append((str(volumes / f'{uid}.mhd'), str(out / 'masks' / f'{uid}.mhd'), kept, shape.value, pad))
    (out / 'masks').mkdir(exist_ok=True)
    indices = ordered_map(_mask_job, jobs, workers=cfg.get_int('workers', 1), desc='Building masks')
    slice_lists = {Path(job[1]).stem: idx for job, idx in zip(jobs, indices)}
    write_slice_indices(out / 'slices.csv', slice_lists)
    cfg.echo(out, 'build-masks')
    _log.info('masks_built', masks=len(jobs), orphans=len(orphans), out=str(out))
    return 0


def _seg_samples_job(job: Tuple[str, str, str, HUWindow, int]) -> List[SliceSample]:
    vol_path, mask_path, uid, window, pad = job
    norm = normalize_hu(load_volume(vol_path), window.lo, window.hi)
    mask = load_mask(mask_path)
    return extract_slice_samples(norm, mask, select_slices(mask, pad), series_uid=uid)


def cmd_train_seg(args: argparse.Namespace, cfg: RunConfig) -> int:
    volumes = _data_path(cfg, 'volumes', 'volumes')
    masks = _data_path(cfg, 'masks', 'masks')
    out = _out_dir(cfg)
    window = cfg.window()
    pad = cfg.get_int('pad', DEFAULT_PAD)
    train_cfg = cfg.train_config()
    workers = cfg.get_int('workers', 1)

    uids = [u for u in _series_in(volumes) if (masks / f'{u}.mhd').exists()]
    split = _take_split(cfg, uids, SEGMENTATION_SPLIT, SplitUnit.SCAN)
    write_split(out / 'split.csv', split)

    def samples(part: Sequence[str], desc: str) -> List[SliceSample]:
        jobs = [(str(volumes / f'{u}.mhd'), str(masks / f'{u}.mhd'), u, window, pad) for u in part]
        return [s for per_scan in ordered_map(_seg_samples_job, jobs, workers, desc) for s in per_scan]

    train, val = samples(split.train, 'Loading train slices'), samples(split.val, 'Loading val slices')
    if not train:
        raise CascadeError('no training slices: the train split holds no annotated slice')
    model = build_segmentation_net(train[0].image.shape, train_cfg.seed, **_arch_options(cfg, ArchID.UNET_SEG))
    ckpt, history = train_segmentation(TrainingData(train, val), model, train_cfg,
                                       notes={'split_digest': split_digest(split)})
    save_checkpoint(ckpt, out / 'checkpoint')
    write_history(out / 'history.csv', history)
    cfg.echo(out, 'train-seg')
    _print(ckpt.digest)
    return 0


def _screen_job(job: Tuple[str, str, str, float, ScreenOpts]) -> List[ScreenResult]:
    ckpt_path, vol_path, uid, threshold, opts = job
    norm = normalize_hu(load_volume(vol_path), opts.window.lo, opts.window.hi)
    slices = extract_slice_samples(norm, None, range(norm.nz), series_uid=uid)
    return screen_slices(_checkpoint(ckpt_path), slices, threshold, opts.batch_size)


def cmd_screen(args: argparse.Namespace, cfg: RunConfig) -> int:
    seg_path = cfg.get_path('seg_ckpt', required=True)
    volumes = _data_path(cfg, 'volumes', 'volumes')
    out = _out_dir(cfg)
    threshold = cfg.threshold()
    opts = cfg.screen_opts()
    save_maps = cfg.get_bool('save_maps')

    uids = _restrict(cfg, _series_in(volumes))
    _checkpoint(str(seg_path))
    jobs = [(str(seg_path), str(volumes / f'{u}.mhd'), u, threshold, opts) for u in uids]
    per_scan = ordered_map(_screen_job, jobs, cfg.get_int('workers', 1), desc='Screening')

    saver = H5ProbMapSaver('prob_maps.h5', out, overwrite=True) if save_maps else None
    try:
        for uid, results in zip(uids, per_scan):
            write_screen_results(out / f'{uid}_screen.csv', results)
            if saver is not None and results:
                saver.record(ProbMapRecord(series_uid=uid,
                                           slice_indices=np.array([r.slice_index for r in results]),
                                           prob_maps=np.stack([r.prob_map for r in results]),
                                           max_probs=np.array([r.max_prob for r in results])))
    finally:
        if saver is not None:
            saver.close()
    cfg.echo(out, 'screen')
    _log.info('screened', series=len(uids), suspicious=sum(r.suspicious for rs in per_scan for r in rs))
    return 0


def cmd_train_cls(args: argparse.Namespace, cfg: RunConfig) -> int:
    seg_path = cfg.get_path('seg_ckpt', required=True)
    volumes = _data_path(cfg, 'volumes', 'volumes')
    labels_path = _data_path(cfg, 'labels', 'labels.csv')
    out = _out_dir(cfg)
    arch = cfg.get_enum('arch', ArchID, ArchID.CASCADE_CLS)
    if not arch.is_classifier:
        raise ConfigError(f'arch must be one of {[a.value for a in CLASSIFIER_ARCHS]}, got {arch.value}')
    threshold = cfg.threshold()
    opts = cfg.screen_opts()
    train_cfg = cfg.train_config()
    arch_options = _arch_options(cfg, arch)

    seg = _checkpoint(str(seg_path))
    if seg.arch_id != ArchID.UNET_SEG:
        raise CascadeError(f'arch mismatch: --seg-ckpt holds {seg.arch_id.value}')
    labels = parse_case_labels(labels_path)
    available = set(_series_in(volumes))
    uids = sorted(u for u in labels if u in available)
    split = _take_split(cfg, uids, CLASSIFIER_SPLIT, SplitUnit.CASE)
    write_split(out / 'split.csv', split)

    def cases(part: Sequence[str]) -> List[LabeledCase]:
        return [LabeledCase(u, _normalized(volumes, u, opts.window), labels[u]) for u in part]

    train = assemble_classifier_samples(seg, cases(split.train), threshold, opts)
    val = assemble_classifier_samples(seg, cases(split.val), threshold, opts)
    if not train:
        raise CascadeError('no suspicious training slices; lower --threshold or check --seg-ckpt')
    model = ModelFactory.build(arch, train[0].fused.channels.shape[1:], train_cfg.seed, **arch_options)
    ckpt, history = train_classifier(TrainingData(train, val), seg, model, train_cfg,
                                     notes={'split_digest': split_digest(split)})
    save_checkpoint(ckpt, out / 'checkpoint')
    write_history(out / 'history.csv', history)
    cfg.echo(out, 'train-cls')
    _print(ckpt.digest)
    return 0


def _infer_job(job: Tuple[str, str, str, str, float, ScreenOpts]) -> CaseVerdict:
    seg_path, cls_path, vol_path, uid, threshold, opts = job
    norm = normalize_hu(load_volume(vol_path), opts.window.lo, opts.window.hi)
    return run_cascade_normalized(_checkpoint(seg_path), _checkpoint(cls_path), norm, uid, threshold, opts).verdict


def cmd_infer(args: argparse.Namespace, cfg: RunConfig) -> int:
    seg_path = cfg.get_path('seg_ckpt', required=True)
    cls_paths = _cls_paths(cfg)
    if len(cls_paths) != 1:
        raise ConfigError('infer takes exactly one --cls-ckpt')
    volumes = _data_path(cfg, 'volumes', 'volumes')
    out = _out_dir(cfg)
    threshold = cfg.threshold()
    opts = cfg.screen_opts()

    uids = _restrict(cfg, _series_in(volumes))
    _checkpoint(str(seg_path))
    _checkpoint(str(cls_paths[0]))
    jobs = [(str(seg_path), str(cls_paths[0]), str(volumes / f'{u}.mhd'), u, threshold, opts) for u in uids]
    verdicts = ordered_map(_infer_job, jobs, cfg.get_int('workers', 1), desc='Inferring')
    write_verdicts(out / 'verdicts.csv', verdicts)
    write_slice_probabilities(out / 'slice_probs.csv', verdicts)
    cfg.echo(out, 'infer')
    _log.info('inferred', series=len(verdicts), malignant=sum(v.predicted_label.target for v in verdicts),
              no_findings=sum(v.no_findings for v in verdicts))
    return 0


def _run_name(path: Path, taken: Sequence[str]) -> str:
    p = path.parent if path.suffix == '.yaml' else path
    name = p.parent.name if p.name == 'checkpoint' and p.parent.name else p.name
    base, i = name, 2
    while name in taken:
        name, i = f'{base}_{i}', i + 1
    return name


def _pixel_roc_report(cfg: RunConfig, out: Path, uids: Sequence[str], max_points: int) -> Optional[float]:
    maps_path = cfg.get_path('prob_maps')
    if maps_path is None:
        return None
    masks = _data_path(cfg, 'masks', 'masks')
    loader = H5ProbMapLoader(maps_path.name, maps_path.parent)
    selected = set(uids)
    prob_maps, truths = [], []
    for uid in loader.series_uids():
        if uid not in selected:
            continue
        mask_path = masks / f'{uid}.mhd'
        if not mask_path.exists():
            _log.warning('pixel_roc_missing_mask', series=uid)
            continue
        record = loader.get(uid)
        mask = load_mask(mask_path)
        prob_maps += list(record.prob_maps)
        truths += [mask.voxels[i] for i in record.slice_indices]
    curve = pixel_roc(prob_maps, truths)
    write_roc_points(out / 'roc_pixel.csv', curve.thinned(max_points) if max_points else curve)
    _log.info('pixel_roc', auc=curve.auc, pixels=int(sum(p.size for p in prob_maps)))
    return curve.auc


def cmd_eval(args: argparse.Namespace, cfg: RunConfig) -> int:
    seg_path = cfg.get_path('seg_ckpt', required=True)
    cls_paths = _cls_paths(cfg)
    volumes = _data_path(cfg, 'volumes', 'volumes')
    labels_path = _data_path(cfg, 'labels', 'labels.csv')
    out = _out_dir(cfg)
    threshold = cfg.threshold()
    opts = cfg.screen_opts()
    averaging = cfg.get_enum('averaging', Averaging, Averaging.POSITIVE)
    level = cfg.get_enum('level', EvalLevel, EvalLevel.CASE)
    max_points = cfg.get_int('max_roc_points', 10000)

    labels = parse_case_labels(labels_path)
    available = set(_series_in(volumes))
    uids = _restrict(cfg, sorted(u for u in labels if u in available))
    cases = [LabeledCase(u, _normalized(volumes, u, opts.window), labels[u]) for u in uids]

    runs: List[NetworkRun] = []
    for path in cls_paths:
        runs.append(NetworkRun.from_checkpoint(_run_name(path, [r.name for r in runs]), _checkpoint(str(path))))
    report = compare_networks(runs, cases, _checkpoint(str(seg_path)), threshold, opts, level, averaging)

    frame = report.to_frame()
    write_report(out / 'report', frame)
    for row in report.rows:
        for kind, curve in row.curves.items():
            write_roc_points(out / f'roc_{kind.value}_{row.name}.csv', curve)
    pixel_auc = _pixel_roc_report(cfg, out, uids, max_points)
    cfg.echo(out, 'eval')

    _print(frame.to_string(index=False, na_rep='undefined'))
    if pixel_auc is not None:
        _print(f'{RocKind.PIXEL.value} auc {pixel_auc!r}')
    return 0


def cmd_describe(args: argparse.Namespace, cfg: RunConfig) -> int:
    hw = cfg.get_tuple('size', 2, int, (64, 64))
    archs = [cfg.get_enum('arch', ArchID, ArchID.UNET_SEG)] if cfg.has('arch') else list(ArchID)
    for arch in archs:
        options = _arch_options(cfg, arch)
        model = ModelFactory.build(arch, hw, cfg.seed, **options)
        n = sum(p.numel() for p in model.parameters())
        expected = expected_parameter_count(arch, hw, options.get('upsample', UpsampleMode.NEAREST),
                                            options.get('width', 0))
        _print(f'{arch.value} input {hw[0]}x{hw[1]}x{model.in_channels} parameters {n} (expected {expected})')
        _print(layer_table(model).to_string(index=False))
        _print('')
    return 0
