from collections import Counter
from typing import List

import numpy as np
import pytest

import nodule_cascade as nc

CaseLabel = nc.interfaces.CaseLabel


def _samples(n_benign: int, n_malignant: int) -> List[nc.interfaces.FusedSample]:
    fused = nc.cascade.fuse_inputs(np.zeros((4, 4)), np.zeros((4, 4)))
    labels = [CaseLabel.BENIGN] * n_benign + [CaseLabel.MALIGNANT] * n_malignant
    return [nc.interfaces.FusedSample(fused, f'case_{i}', 0, label) for i, label in enumerate(labels)]


def _histogram(samples: List[nc.interfaces.FusedSample]) -> "Counter[nc.interfaces.CaseLabel]":
    return Counter(s.case_label for s in samples)


@pytest.mark.UNIT_TEST
def test_oversample_three_times() -> None:
    out = nc.training.oversample_benign(_samples(10, 50), 3)
    assert _histogram(out) == Counter({CaseLabel.BENIGN: 30, CaseLabel.MALIGNANT: 50})
    assert Counter(s.series_uid for s in out)['case_0'] == 3
    assert Counter(s.series_uid for s in out)['case_59'] == 1


@pytest.mark.UNIT_TEST
@pytest.mark.parametrize('factor', [1, 2, 5])
def test_oversample_scales_histogram(factor: int) -> None:
    samples = _samples(7, 12)
    out = nc.training.oversample_benign(samples, factor, seed=3)
    assert _histogram(out) == Counter({CaseLabel.BENIGN: 7 * factor, CaseLabel.MALIGNANT: 12})
    if factor == 1:
        assert sorted(s.series_uid for s in out) == sorted(s.series_uid for s in samples)


@pytest.mark.UNIT_TEST
def test_oversample_order_follows_seed() -> None:
    samples = _samples(5, 20)
    a = [s.series_uid for s in nc.training.oversample_benign(samples, 3, seed=1)]
    b = [s.series_uid for s in nc.training.oversample_benign(samples, 3, seed=1)]
    c = [s.series_uid for s in nc.training.oversample_benign(samples, 3, seed=2)]
    assert a == b
    assert a != c


@pytest.mark.UNIT_TEST
def test_oversample_rejects_zero_factor() -> None:
    with pytest.raises(nc.interfaces.ConfigError):
        nc.training.oversample_benign(_samples(1, 1), 0)
