import dataclasses
import enum
from pathlib import Path
from typing import List, Mapping, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.stats import rankdata

from ..interfaces import AnnotationFormatError, CaseLabel, CaseVerdict, ShapeMismatchError, SingleClassError

__all__ = ['RocKind', 'RocCurve', 'roc_curve', 'roc_points', 'auc', 'rank_auc', 'pixel_roc', 'case_roc',
           'slice_roc', 'write_roc_points']

PathLike = Union[str, Path]


class RocKind(enum.Enum):
    PIXEL = 'pixel'
    """Segmentation maps against ground-truth masks, one item per pixel"""

    SLICE = 'slice'
    """Per-slice malignant probabilities against the case label"""

    CASE = 'case'
    """Case scores against the case label"""


@dataclasses.dataclass(frozen=True, eq=False)
class RocCurve:
    """Operating points swept over the distinct scores in descending order, starting at (0, 0) and ending at (1, 1)."""

    thresholds: np.ndarray
    """Score at or above which an item counts positive; the first entry is +inf"""

    fpr: np.ndarray
    tpr: np.ndarray
    auc: float
    kind: RocKind = RocKind.CASE

    @property
    def points(self) -> List[Tuple[float, float]]:
        return [(float(f), float(t)) for f, t in zip(self.fpr, self.tpr)]

    def __len__(self) -> int:
        return len(self.fpr)

    def thinned(self, max_points: int) -> 'RocCurve':
        """Evenly spaced subset of the points, endpoints kept. Pixel curves can carry millions of points."""
        if max_points < 2:
            raise ValueError(f'max_points must be >= 2, got {max_points}')
        if len(self) <= max_points:
            return self
        keep = np.unique(np.linspace(0, len(self) - 1, max_points).round().astype(int))
        return dataclasses.replace(self, thresholds=self.thresholds[keep], fpr=self.fpr[keep], tpr=self.tpr[keep])


def _as_binary(scores: Sequence[float], truths: Sequence[bool]) -> Tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64).ravel()
    t = np.asarray(truths).astype(bool).ravel()
    if s.shape != t.shape:
        raise ShapeMismatchError('number of truths', s.shape, t.shape)
    n_pos = int(np.sum(t))
    if n_pos == 0 or n_pos == len(t):
        raise SingleClassError(f'ROC needs both classes, got {n_pos} positive of {len(t)}')
    return s, t


def _counts(s: np.ndarray, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    order = np.argsort(-s, kind='stable')
    s, t = s[order], t[order]
    last = np.r_[np.nonzero(np.diff(s))[0], len(s) - 1]
    tps = np.cumsum(t, dtype=np.int64)[last]
    fps = (last + 1) - tps
    return np.r_[np.inf, s[last]], np.r_[0, fps], np.r_[0, tps]


def _trapezoid(fps: np.ndarray, tps: np.ndarray) -> float:
    # integer counts keep the sum exact up to the final division
    area2 = int(np.sum(np.diff(fps) * (tps[1:] + tps[:-1])))
    return area2 / (2 * int(fps[-1]) * int(tps[-1]))


def roc_curve(scores: Sequence[float], truths: Sequence[bool], kind: RocKind = RocKind.CASE) -> RocCurve:
    """
    ROC of scores against binary truths, ties grouped into one operating point.

    :param scores: real scores, higher means positive
    :param truths: binary labels
    :param kind: what the items are, carried into reports
    :return: RocCurve with its trapezoidal AUC
    """
    s, t = _as_binary(scores, truths)
    thresholds, fps, tps = _counts(s, t)
    return RocCurve(thresholds=thresholds, fpr=fps / fps[-1], tpr=tps / tps[-1], auc=_trapezoid(fps, tps),
                    kind=kind)


def roc_points(scores: Sequence[float], truths: Sequence[bool]) -> List[Tuple[float, float]]:
    """(fpr, tpr) points of the ROC, non-decreasing in both coordinates."""
    return roc_curve(scores, truths).points


def auc(scores: Sequence[float], truths: Sequence[bool]) -> float:
    """Trapezoidal area under the ROC; ties count one half."""
    s, t = _as_binary(scores, truths)
    _, fps, tps = _counts(s, t)
    return _trapezoid(fps, tps)


def rank_auc(scores: Sequence[float], truths: Sequence[bool]) -> float:
    """Mann-Whitney statistic P(score+ > score-) + P(tie) / 2 from average ranks."""
    s, t = _as_binary(scores, truths)
    n_pos = int(np.sum(t))
    n_neg = len(t) - n_pos
    ranks = rankdata(s)
    return float((np.sum(ranks[t]) - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def pixel_roc(prob_maps: Sequence[np.ndarray], masks: Sequence[np.ndarray]) -> RocCurve:
    """
    Pixel-level ROC of segmentation output: every pixel of every map is one item.

    :param prob_maps: probability maps
    :param masks: ground-truth masks, paired with prob_maps
    :return: RocCurve of kind PIXEL
    """
    if len(prob_maps) != len(masks):
        raise ShapeMismatchError('number of masks', len(prob_maps), len(masks))
    for p, m in zip(prob_maps, masks):
        if p.shape != m.shape:
            raise ShapeMismatchError('mask shape', p.shape, m.shape)
    if not prob_maps:
        raise SingleClassError('no pixels to evaluate')
    scores = np.concatenate([np.ravel(p) for p in prob_maps])
    truths = np.concatenate([np.ravel(m) for m in masks]) > 0
    if not np.any(truths):
        raise SingleClassError('masks have no positive pixel')
    return roc_curve(scores, truths, RocKind.PIXEL)


def _label_of(labels: Mapping[str, CaseLabel], series_uid: str) -> bool:
    if series_uid not in labels:
        raise AnnotationFormatError(f'no label for series {series_uid}')
    return labels[series_uid] == CaseLabel.MALIGNANT


def case_roc(verdicts: Sequence[CaseVerdict], labels: Mapping[str, CaseLabel]) -> RocCurve:
    """ROC over case scores, malignant positive."""
    return roc_curve([v.case_score for v in verdicts], [_label_of(labels, v.series_uid) for v in verdicts],
                     RocKind.CASE)


def slice_roc(verdicts: Sequence[CaseVerdict], labels: Mapping[str, CaseLabel]) -> RocCurve:
    """ROC over the malignant probability of every suspicious slice, each slice carrying its case label."""
    scores = [p for v in verdicts for _, p in v.slice_probs]
    truths = [_label_of(labels, v.series_uid) for v in verdicts for _ in v.slice_probs]
    return roc_curve(scores, truths, RocKind.SLICE)


def write_roc_points(path: PathLike, curve: RocCurve) -> None:
    pd.DataFrame({'threshold': curve.thresholds, 'fpr': curve.fpr, 'tpr': curve.tpr}).to_csv(
        path, index=False, float_format='%.17g')
