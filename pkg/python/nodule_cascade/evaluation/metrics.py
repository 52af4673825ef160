import enum
from typing import NamedTuple, Optional, Sequence

import numpy as np

from ..interfaces import CaseLabel, ShapeMismatchError

__all__ = ['ConfusionMatrix', 'Averaging', 'Metrics', 'confusion', 'prf_accuracy']


class ConfusionMatrix(NamedTuple):
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def swapped(self) -> 'ConfusionMatrix':
        """The same counts seen from the other class."""
        return ConfusionMatrix(tp=self.tn, fp=self.fn, fn=self.fp, tn=self.tp)


class Averaging(enum.Enum):
    POSITIVE = 'positive'
    """Precision, recall and f1 of the malignant class"""

    MACRO = 'macro'
    """Unweighted mean over both classes of the defined values"""


class Metrics(NamedTuple):
    """Confusion-matrix metrics; None marks a metric whose denominator is zero."""

    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]
    accuracy: Optional[float]


def confusion(preds: Sequence[CaseLabel],
              truths: Sequence[CaseLabel],
              positive_class: CaseLabel = CaseLabel.MALIGNANT) -> ConfusionMatrix:
    """
    Count predictions against ground truth.

    :param preds: predicted labels
    :param truths: true labels, same length
    :param positive_class: class counted as positive
    :return: ConfusionMatrix
    """
    if len(preds) != len(truths):
        raise ShapeMismatchError('number of predictions', len(truths), len(preds))
    p = np.array([x == positive_class for x in preds], dtype=bool)
    t = np.array([x == positive_class for x in truths], dtype=bool)
    return ConfusionMatrix(tp=int(np.sum(p & t)), fp=int(np.sum(p & ~t)),
                           fn=int(np.sum(~p & t)), tn=int(np.sum(~p & ~t)))


def _ratio(num: int, den: int) -> Optional[float]:
    return num / den if den else None


def _positive_prf(cm: ConfusionMatrix) -> Metrics:
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    f1: Optional[float] = None
    if precision is not None and recall is not None and precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    return Metrics(precision=precision, recall=recall, f1=f1, accuracy=_ratio(cm.tp + cm.tn, cm.total))


def _mean_defined(a: Optional[float], b: Optional[float]) -> Optional[float]:
    values = [v for v in (a, b) if v is not None]
    return sum(values) / len(values) if values else None


def prf_accuracy(cm: ConfusionMatrix, averaging: Averaging = Averaging.POSITIVE) -> Metrics:
    """
    Precision, recall, f1 and accuracy of a confusion matrix.

    Any 0/0 comes back as None, never 0. With MACRO averaging each of precision, recall and f1 is the mean over
    the two classes of the values that are defined.

    :param cm: confusion matrix
    :param averaging: POSITIVE or MACRO
    :return: Metrics
    """
    pos = _positive_prf(cm)
    if averaging == Averaging.POSITIVE:
        return pos
    neg = _positive_prf(cm.swapped())
    return Metrics(precision=_mean_defined(pos.precision, neg.precision),
                   recall=_mean_defined(pos.recall, neg.recall),
                   f1=_mean_defined(pos.f1, neg.f1),
                   accuracy=pos.accuracy)
