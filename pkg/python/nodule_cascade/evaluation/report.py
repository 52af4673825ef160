import dataclasses
import enum
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Union

import pandas as pd
import structlog

from .metrics import Averaging, ConfusionMatrix, Metrics, confusion, prf_accuracy
from .roc import RocCurve, RocKind, case_roc, slice_roc
from ..cascade import DEFAULT_THRESHOLD, LabeledCase, ScreenOpts, materialize, run_cascade_normalized
from ..interfaces import AnnotationFormatError, ArchID, CaseLabel, CaseVerdict, ModelCheckpoint, SingleClassError, \
    SplitMismatchError

__all__ = ['EvalLevel', 'EvalReport', 'NetworkRun', 'ComparisonReport', 'evaluate_verdicts', 'compare_networks',
           'write_report']

_log = structlog.get_logger(__name__)

PathLike = Union[str, Path]

REPORT_COLUMNS = ['network', 'arch', 'precision', 'recall', 'f1', 'accuracy', 'auc', 'roc_kind', 'n_items', 'note']

FULL_WIDTH = 64


class EvalLevel(enum.Enum):
    CASE = 'case'
    """One item per case, predicted label from the case score"""

    SLICE = 'slice'
    """One item per suspicious slice, predicted malignant at probability >= 0.5, true label of its case"""


@dataclasses.dataclass(frozen=True)
class EvalReport:
    name: str
    confusion: ConfusionMatrix
    metrics: Metrics
    curves: Mapping[RocKind, RocCurve] = dataclasses.field(default_factory=dict)
    level: EvalLevel = EvalLevel.CASE
    arch_id: Optional[ArchID] = None
    note: str = ''

    @property
    def roc(self) -> Optional[RocCurve]:
        """Curve matching the evaluation level"""
        return self.curves.get(RocKind(self.level.value))

    @property
    def auc(self) -> Optional[float]:
        curve = self.roc
        return curve.auc if curve is not None else None

    def row(self) -> Dict[str, object]:
        curve = self.roc
        return {'network': self.name,
                'arch': self.arch_id.value if self.arch_id else '',
                'precision': self.metrics.precision,
                'recall': self.metrics.recall,
                'f1': self.metrics.f1,
                'accuracy': self.metrics.accuracy,
                'auc': self.auc,
                'roc_kind': curve.kind.value if curve else '',
                'n_items': self.confusion.total,
                'note': self.note}


def _try_curve(fn: Callable[[Sequence[CaseVerdict], Mapping[str, CaseLabel]], RocCurve],
               verdicts: Sequence[CaseVerdict],
               labels: Mapping[str, CaseLabel]) -> Optional[RocCurve]:
    try:
        return fn(verdicts, labels)
    except SingleClassError as e:
        _log.warning('roc_skipped', reason=str(e))
        return None


def evaluate_verdicts(name: str,
                      verdicts: Sequence[CaseVerdict],
                      labels: Mapping[str, CaseLabel],
                      averaging: Averaging = Averaging.POSITIVE,
                      level: EvalLevel = EvalLevel.CASE,
                      arch_id: Optional[ArchID] = None,
                      note: str = '') -> EvalReport:
    """
    Score cascade verdicts against case labels.

    Both the case and the slice ROC are computed when each has two classes; a single-class population leaves that
    curve out with a warning.

    :param name: row name in reports
    :param verdicts: cascade output per case
    :param labels: true label per series
    :param averaging: POSITIVE or MACRO
    :param level: CASE or SLICE items for the confusion matrix
    :param arch_id: classifier architecture, for the report
    :param note: free text carried into the report
    :return: EvalReport
    """
    unlabeled = sorted({v.series_uid for v in verdicts} - set(labels))
    if unlabeled:
        raise AnnotationFormatError(f'no label for series {", ".join(unlabeled)}')
    if level == EvalLevel.CASE:
        preds = [v.predicted_label for v in verdicts]
        truths = [labels[v.series_uid] for v in verdicts]
    else:
        preds = [CaseLabel.from_target(int(p >= 0.5)) for v in verdicts for _, p in v.slice_probs]
        truths = [labels[v.series_uid] for v in verdicts for _ in v.slice_probs]
    cm = confusion(preds, truths)
    curves: Dict[RocKind, RocCurve] = {}
    for kind, fn in ((RocKind.CASE, case_roc), (RocKind.SLICE, slice_roc)):
        curve = _try_curve(fn, verdicts, labels)
        if curve is not None:
            curves[kind] = curve
    return EvalReport(name=name, confusion=cm, metrics=prf_accuracy(cm, averaging), curves=curves, level=level,
                      arch_id=arch_id, note=note)


@dataclasses.dataclass(frozen=True)
class NetworkRun:
    """A trained classifier entered into a comparison."""

    name: str
    checkpoint: ModelCheckpoint
    split_digest: str = ''
    seed: int = 0

    @staticmethod
    def from_checkpoint(name: str, ckpt: ModelCheckpoint) -> 'NetworkRun':
        return NetworkRun(name=name, checkpoint=ckpt, split_digest=ckpt.meta.notes.get('split_digest', ''),
                          seed=ckpt.meta.seed)


@dataclasses.dataclass(frozen=True)
class ComparisonReport:
    rows: List[EvalReport]
    averaging: Averaging = Averaging.POSITIVE

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.row() for r in self.rows], columns=REPORT_COLUMNS)


def _note(ckpt: ModelCheckpoint) -> str:
    width = ckpt.options.get('width')
    if ckpt.arch_id == ArchID.BASELINE_ENCDEC and width is not None and int(width) < FULL_WIDTH:
        return f'reduced width {width}'
    return ''


def compare_networks(runs: Sequence[NetworkRun],
                     cases: Sequence[LabeledCase],
                     seg: ModelCheckpoint,
                     threshold: float = DEFAULT_THRESHOLD,
                     opts: ScreenOpts = ScreenOpts(),
                     level: EvalLevel = EvalLevel.CASE,
                     averaging: Averaging = Averaging.POSITIVE) -> ComparisonReport:
    """
    Run the cascade once per classifier on the same cases and collect one report row per network.

    :param runs: classifiers trained on the same split with the same seed
    :param cases: labeled evaluation cases
    :param seg: screening checkpoint shared by every row
    :param threshold: discriminator threshold
    :param opts: cascade inference settings
    :param level: CASE or SLICE items
    :param averaging: POSITIVE or MACRO
    :return: ComparisonReport, rows in input order
    """
    keys = {(r.split_digest, r.seed) for r in runs}
    if len(keys) > 1:
        raise SplitMismatchError('refusing to compare networks trained on different splits or seeds: ' +
                                 ', '.join(f'{r.name}={r.split_digest[:12] or "?"}/{r.seed}' for r in runs))
    labels = {c.series_uid: c.label for c in cases if c.label is not None}
    seg_net = materialize(seg, [ArchID.UNET_SEG])
    rows = []
    for run in runs:
        verdicts = [run_cascade_normalized(seg_net, run.checkpoint, c.volume, c.series_uid, threshold, opts).verdict
                    for c in cases]
        report = evaluate_verdicts(run.name, verdicts, labels, averaging, level, run.checkpoint.arch_id,
                                   _note(run.checkpoint))
        _log.info('network_evaluated', network=run.name, accuracy=report.metrics.accuracy, auc=report.auc)
        rows.append(report)
    return ComparisonReport(rows=rows, averaging=averaging)


def write_report(stem: PathLike, frame: pd.DataFrame) -> List[Path]:
    """
    Write a report table as <stem>.csv and as aligned text <stem>.txt. Undefined metrics read 'undefined'.

    :return: the two paths
    """
    stem = Path(stem)
    csv_path, txt_path = stem.with_suffix('.csv'), stem.with_suffix('.txt')
    frame.to_csv(csv_path, index=False, na_rep='undefined')
    txt_path.write_text(frame.to_string(index=False, na_rep='undefined') + '\n')
    return [csv_path, txt_path]
