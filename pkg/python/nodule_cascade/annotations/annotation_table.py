import math
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Union

import pandas as pd
import structlog

from ..interfaces import AnnotationFormatError, CaseLabel, NoduleAnnotation

__all__ = ['ANNOTATION_COLUMNS', 'LABEL_COLUMNS', 'parse_annotations', 'write_annotations', 'filter_findings',
           'parse_case_labels', 'write_case_labels']

_log = structlog.get_logger(__name__)

ANNOTATION_COLUMNS = ['seriesuid', 'coordX', 'coordY', 'coordZ', 'diameter_mm']
LABEL_COLUMNS = ['seriesuid', 'label']

PathLike = Union[str, Path]


def _read_table(path: PathLike, columns: Sequence[str]) -> pd.DataFrame:
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise AnnotationFormatError(f'{path}: empty file, expected header {",".join(columns)}') from None
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise AnnotationFormatError(f'{path}: missing column(s) {missing}')
    return df


def _decimal(path: PathLike, line_no: int, column: str, value: str) -> float:
    try:
        number = float(value)
    except ValueError:
        raise AnnotationFormatError(f'{path}:{line_no}: non-numeric {column} {value!r}') from None
    if not math.isfinite(number):
        raise AnnotationFormatError(f'{path}:{line_no}: non-finite {column} {value!r}')
    return number


def parse_annotations(path: PathLike) -> List[NoduleAnnotation]:
    """
    Read the nodule table, one finding per data line, in file order.

    :param path: CSV with header seriesuid,coordX,coordY,coordZ,diameter_mm
    :return: list of NoduleAnnotation
    """
    df = _read_table(path, ANNOTATION_COLUMNS)
    findings = []
    # header is line 1
    for line_no, row in enumerate(df.itertuples(index=False), start=2):
        record = row._asdict()
        x, y, z, diameter = (_decimal(path, line_no, c, record[c]) for c in ANNOTATION_COLUMNS[1:])
        if not diameter > 0:
            raise AnnotationFormatError(f'{path}:{line_no}: non-positive diameter {diameter}')
        if not record['seriesuid']:
            raise AnnotationFormatError(f'{path}:{line_no}: empty seriesuid')
        findings.append(NoduleAnnotation(series_uid=record['seriesuid'], center_world=(x, y, z),
                                         diameter_mm=diameter))
    _log.debug('annotations_parsed', path=str(path), n=len(findings))
    return findings


def write_annotations(path: PathLike, findings: Sequence[NoduleAnnotation]) -> None:
    rows = [[f.series_uid] + [repr(c) for c in f.center_world] + [repr(f.diameter_mm)] for f in findings]
    pd.DataFrame(rows, columns=ANNOTATION_COLUMNS).to_csv(path, index=False)


def filter_findings(findings: Sequence[NoduleAnnotation],
                    series_uid: str,
                    min_diameter_mm: Optional[float] = None) -> List[NoduleAnnotation]:
    """Findings of one series, optionally dropping those below a minimum diameter."""
    return [f for f in findings
            if f.series_uid == series_uid and (min_diameter_mm is None or f.diameter_mm >= min_diameter_mm)]


def parse_case_labels(path: PathLike) -> Dict[str, CaseLabel]:
    df = _read_table(path, LABEL_COLUMNS)
    labels: Dict[str, CaseLabel] = {}
    for line_no, (uid, label) in enumerate(zip(df['seriesuid'], df['label']), start=2):
        if uid in labels:
            raise AnnotationFormatError(f'{path}:{line_no}: duplicate seriesuid {uid!r}')
        try:
            labels[uid] = CaseLabel(label.strip().lower())
        except ValueError:
            raise AnnotationFormatError(f'{path}:{line_no}: unknown label {label!r}') from None
    return labels


def write_case_labels(path: PathLike, labels: Mapping[str, CaseLabel]) -> None:
    pd.DataFrame([[uid, label.value] for uid, label in labels.items()], columns=LABEL_COLUMNS).to_csv(path,
                                                                                                    index=False)
