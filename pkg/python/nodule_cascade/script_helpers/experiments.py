import dataclasses
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import structlog

from ..annotations import extract_slice_samples, rasterize_mask, select_slices
from ..cascade import LabeledCase, ScreenOpts, assemble_classifier_samples, screen_slices
from ..evaluation import ComparisonReport, NetworkRun, RocCurve, compare_networks, pixel_roc, write_report, \
    write_roc_points
from ..interfaces import ArchID, MaskVolume, ModelCheckpoint, SliceSample
from ..models import ModelFactory, build_segmentation_net, save_checkpoint
from ..phantom import PhantomSpec, case_uid, generate_phantom_volume
from ..training import CLASSIFIER_SPLIT, SEGMENTATION_SPLIT, SplitConfig, SplitUnit, TrainConfig, TrainingData, \
    split_dataset, split_digest, train_classifier, train_segmentation
from ..utils import init_globals, named_rng
from ..volume import normalize_hu

__all__ = ['ExperimentOpts', 'ExperimentResult', 'phantom_experiment_main']

_log = structlog.get_logger(__name__)


@dataclasses.dataclass(frozen=True)
class ExperimentOpts:
    """Settings of the end-to-end phantom experiment."""

    spec: PhantomSpec = PhantomSpec()
    """Phantom dataset, its seed is also the seed of every split, initialization and training run"""

    seg_train: TrainConfig = TrainConfig(epochs=10)
    """Screening network training"""

    cls_train: TrainConfig = TrainConfig(epochs=30)
    """Classifier training, shared by every compared architecture"""

    seg_width: int = 64
    """U-Net base width of the screening network"""

    threshold: float = 0.35
    """Discriminator threshold"""

    screen: ScreenOpts = ScreenOpts()

    archs: Tuple[ArchID, ...] = (ArchID.CASCADE_CLS, ArchID.BASELINE_FC, ArchID.BASELINE_ENCDEC)
    """Classifiers entered into the comparison, the proposed one first"""


class ExperimentResult(NamedTuple):
    pixel_roc: RocCurve
    comparison: ComparisonReport
    seg_checkpoint: ModelCheckpoint
    cls_checkpoints: Dict[ArchID, ModelCheckpoint]

    @property
    def case_accuracy(self) -> Optional[float]:
        """Case accuracy of the first compared classifier"""
        return self.comparison.rows[0].metrics.accuracy


class _Case(NamedTuple):
    labeled: LabeledCase
    mask: MaskVolume


def _make_cases(spec: PhantomSpec, window_lo: float, window_hi: float) -> List[_Case]:
    cases = []
    for i in range(spec.n_cases):
        uid = case_uid(i)
        phantom = generate_phantom_volume(spec, named_rng(spec.seed, 'phantom', i), spec.label_of(i), uid)
        # ground truth is rebuilt from the annotation, the way real datasets provide it
        mask = rasterize_mask(phantom.volume, [phantom.annotation])
        norm = normalize_hu(phantom.volume, window_lo, window_hi)
        cases.append(_Case(LabeledCase(uid, norm, phantom.label), mask))
    return cases


def _seg_samples(cases: Sequence[_Case]) -> List[SliceSample]:
    return [s for c in cases
            for s in extract_slice_samples(c.labeled.volume, c.mask, select_slices(c.mask), c.labeled.label,
                                           c.labeled.series_uid)]


def phantom_experiment_main(opts: ExperimentOpts = ExperimentOpts(),
                            out_dir: Optional[Path] = None) -> ExperimentResult:
    """
    Generate a phantom dataset, train the screening network, measure its pixel ROC on held-out scans, then train
    every classifier on screened and fused slices and compare them on held-out cases.

    :param opts: experiment settings
    :param out_dir: optional directory receiving checkpoints, the report and ROC files
    :return: ExperimentResult
    """
    seed = opts.spec.seed
    init_globals(seed, _log)
    window = opts.screen.window
    cases = _make_cases(opts.spec, window.lo, window.hi)
    by_uid = {c.labeled.series_uid: c for c in cases}
    uids = sorted(by_uid)
    hw = opts.spec.dims[1], opts.spec.dims[0]

    seg_split = split_dataset(uids, SplitConfig(SEGMENTATION_SPLIT, seed, SplitUnit.SCAN))
    train = _seg_samples([by_uid[u] for u in seg_split.train])
    val = _seg_samples([by_uid[u] for u in seg_split.val])
    seg_net = build_segmentation_net(hw, seed, width=opts.seg_width)
    seg_cfg = dataclasses.replace(opts.seg_train, seed=seed)
    seg_ckpt, _ = train_segmentation(TrainingData(train, val), seg_net, seg_cfg,
                                     notes={'split_digest': split_digest(seg_split)})

    prob_maps, truths = [], []
    for u in seg_split.test:
        c = by_uid[u]
        slices = extract_slice_samples(c.labeled.volume, c.mask, range(c.labeled.volume.nz), series_uid=u)
        prob_maps += [r.prob_map for r in screen_slices(seg_ckpt, slices, opts.threshold, opts.screen.batch_size)]
        truths += [s.mask for s in slices]
    seg_roc = pixel_roc(prob_maps, truths)
    _log.info('screening_evaluated', pixel_auc=seg_roc.auc, test_scans=len(seg_split.test))

    cls_split = split_dataset(uids, SplitConfig(CLASSIFIER_SPLIT, seed, SplitUnit.CASE))
    notes = {'split_digest': split_digest(cls_split)}
    cls_train = assemble_classifier_samples(seg_ckpt, [by_uid[u].labeled for u in cls_split.train],
                                            opts.threshold, opts.screen)
    cls_val = assemble_classifier_samples(seg_ckpt, [by_uid[u].labeled for u in cls_split.val],
                                          opts.threshold, opts.screen)
    cls_cfg = dataclasses.replace(opts.cls_train, seed=seed)
    cls_ckpts: Dict[ArchID, ModelCheckpoint] = {}
    for arch in opts.archs:
        model = ModelFactory.build(arch, hw, seed)
        cls_ckpts[arch], _ = train_classifier(TrainingData(cls_train, cls_val), seg_ckpt, model, cls_cfg, notes=notes)

    runs = [NetworkRun.from_checkpoint(arch.value, ckpt) for arch, ckpt in cls_ckpts.items()]
    comparison = compare_networks(runs, [by_uid[u].labeled for u in cls_split.test], seg_ckpt, opts.threshold,
                                  opts.screen)

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        save_checkpoint(seg_ckpt, out_dir / 'seg' / 'checkpoint')
        for arch, ckpt in cls_ckpts.items():
            save_checkpoint(ckpt, out_dir / arch.value / 'checkpoint')
        write_report(out_dir / 'report', comparison.to_frame())
        write_roc_points(out_dir / 'roc_pixel.csv', seg_roc.thinned(10000))
        for row in comparison.rows:
            for kind, curve in row.curves.items():
                write_roc_points(out_dir / f'roc_{kind.value}_{row.name}.csv', curve)

    return ExperimentResult(pixel_roc=seg_roc, comparison=comparison, seg_checkpoint=seg_ckpt,
                            cls_checkpoints=cls_ckpts)
