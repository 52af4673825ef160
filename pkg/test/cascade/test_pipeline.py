from pathlib import Path
from typing import List, Tuple

import numpy as np
import pytest
import torch

import nodule_cascade as nc

CaseLabel = nc.interfaces.CaseLabel

_HW = 16


def _stub_seg(bias: float) -> nc.models.SegmentationNet:
    model = nc.models.build_segmentation_net((_HW, _HW), width=4)
    with torch.no_grad():
        model.head.weight.zero_()
        model.head.bias.fill_(bias)
    return model


def _constant_malignant() -> nc.models.ClassifierNet:
    model = nc.models.build_classifier_net((_HW, _HW))
    with torch.no_grad():
        model.out.weight.zero_()
        model.out.bias.copy_(torch.tensor([-50., 50.]))
    return model


def _volume(nz: int = 4, seed: int = 0) -> nc.interfaces.CtVolume:
    voxels = np.random.default_rng(seed).integers(-1000, 400, size=(nz, _HW, _HW))
    return nc.interfaces.CtVolume(voxels=voxels, origin=(0., 0., 0.), spacing=(1., 1., 3.))


def _case(uid: str, label: CaseLabel, seed: int = 0) -> nc.cascade.LabeledCase:
    return nc.cascade.LabeledCase(uid, nc.volume.normalize_hu(_volume(seed=seed)), label)


@pytest.mark.UNIT_TEST
def test_no_suspicious_slice_gives_benign_no_findings() -> None:
    verdict = nc.cascade.run_cascade(_stub_seg(-10.), _constant_malignant(), _volume(), series_uid='quiet')
    assert verdict.series_uid == 'quiet'
    assert verdict.no_findings
    assert verdict.case_score == 0.
    assert verdict.predicted_label == CaseLabel.BENIGN
    assert verdict.n_suspicious_slices == 0
    assert verdict.slice_probs == ()


@pytest.mark.UNIT_TEST
def test_constant_classifier_propagates_to_case() -> None:
    verdict = nc.cascade.run_cascade(_stub_seg(10.), _constant_malignant(), _volume())
    assert verdict.predicted_label == CaseLabel.MALIGNANT
    assert verdict.case_score == 1.
    assert verdict.n_suspicious_slices == 4
    assert not verdict.no_findings
    assert [i for i, _ in verdict.slice_probs] == [0, 1, 2, 3]


@pytest.mark.UNIT_TEST
def test_run_cascade_is_deterministic_with_checkpoints() -> None:
    seg = nc.models.checkpoint_from_model(_stub_seg(10.))
    cls = nc.models.checkpoint_from_model(nc.models.build_classifier_net((_HW, _HW), seed=5))
    a = nc.cascade.run_cascade(seg, cls, _volume())
    b = nc.cascade.run_cascade(seg, cls, _volume())
    assert a == b


@pytest.mark.UNIT_TEST
def test_run_cascade_normalized_returns_screening() -> None:
    out = nc.cascade.run_cascade_normalized(_stub_seg(10.), _constant_malignant(),
                                            nc.volume.normalize_hu(_volume(nz=3)), 'uid')
    assert len(out.screen) == 3
    assert out.verdict.n_suspicious_slices == 3


@pytest.mark.UNIT_TEST
def test_run_cascade_rejects_swapped_networks() -> None:
    with pytest.raises(nc.interfaces.CheckpointError):
        nc.cascade.run_cascade(_constant_malignant(), _stub_seg(10.), _volume())


@pytest.mark.UNIT_TEST
@pytest.mark.parametrize(['aggregation', 'expected'], [[nc.cascade.Aggregation.MEAN, 0.55],
                                                       [nc.cascade.Aggregation.MAJORITY, 0.5]])
def test_aggregate(aggregation: nc.cascade.Aggregation, expected: float) -> None:
    probs: List[Tuple[int, float]] = [(4, 0.9), (1, 0.2), (3, 0.1), (7, 1.0)]
    assert nc.cascade.aggregate(probs, aggregation) == pytest.approx(expected)
    assert nc.cascade.aggregate(probs[::-1], aggregation) == nc.cascade.aggregate(probs, aggregation)
    assert nc.cascade.aggregate([], aggregation) == 0.


@pytest.mark.UNIT_TEST
def test_aggregate_is_order_invariant() -> None:
    rng = np.random.default_rng(3)
    probs = [(i, float(p)) for i, p in enumerate(rng.random(40))]
    reference = nc.cascade.aggregate(probs)
    for _ in range(5):
        shuffled = [probs[i] for i in rng.permutation(len(probs))]
        assert nc.cascade.aggregate(shuffled) == reference


@pytest.mark.UNIT_TEST
def test_transfer_weights_reproduces_outputs() -> None:
    trained = nc.models.build_segmentation_net((_HW, _HW), seed=1, width=4)
    ckpt = nc.models.checkpoint_from_model(trained)
    first = nc.cascade.transfer_weights(ckpt, nc.models.build_segmentation_net((_HW, _HW), seed=2, width=4))
    second = nc.cascade.transfer_weights(ckpt, nc.models.build_segmentation_net((_HW, _HW), seed=3, width=4))
    rng = np.random.default_rng(0)
    for _ in range(10):
        x = rng.random((1, 1, _HW, _HW)).astype(np.float32)
        expected = nc.models.forward(trained, x).tobytes()
        assert nc.models.forward(first, x).tobytes() == expected
        assert nc.models.forward(second, x).tobytes() == expected


@pytest.mark.UNIT_TEST
def test_transfer_weights_errors() -> None:
    ckpt = nc.models.checkpoint_from_model(nc.models.build_segmentation_net((_HW, _HW), width=4))
    with pytest.raises(nc.interfaces.CheckpointError, match='arch mismatch'):
        nc.cascade.transfer_weights(ckpt, nc.models.build_classifier_net((_HW, _HW)))

    tensors = dict(ckpt.tensors)
    del tensors['body.decoder.0.weight']
    partial = nc.interfaces.ModelCheckpoint(ckpt.arch_id, ckpt.input_hw, ckpt.options, tensors)
    with pytest.raises(nc.interfaces.CheckpointError, match='body.decoder.0.weight'):
        nc.cascade.transfer_weights(partial, nc.models.build_segmentation_net((_HW, _HW), width=4))

    wide = nc.models.build_segmentation_net((_HW, _HW), width=8)
    with pytest.raises(nc.interfaces.CheckpointError, match='shape'):
        nc.cascade.transfer_weights(ckpt, wide)


@pytest.mark.UNIT_TEST
def test_assemble_classifier_samples_drops_quiet_slices() -> None:
    cases = [_case('a', CaseLabel.BENIGN), _case('b', CaseLabel.MALIGNANT, seed=1)]
    samples = nc.cascade.assemble_classifier_samples(_stub_seg(10.), cases)
    assert len(samples) == 8
    assert [s.case_label for s in samples] == [CaseLabel.BENIGN] * 4 + [CaseLabel.MALIGNANT] * 4
    np.testing.assert_array_equal(samples[5].fused.ct, cases[1].volume.voxels[1])
    assert nc.cascade.assemble_classifier_samples(_stub_seg(-10.), cases) == []

    binary = nc.cascade.assemble_classifier_samples(_stub_seg(10.), cases[:1],
                                                    opts=nc.cascade.ScreenOpts(binarize=True))
    assert set(np.unique(binary[0].fused.prob_map)) == {1.}


@pytest.mark.UNIT_TEST
def test_verdict_files_round_trip(tmp_path: Path) -> None:
    seg = _stub_seg(10.)
    cls = nc.models.build_classifier_net((_HW, _HW), seed=2)
    verdicts = [nc.cascade.run_cascade(seg, cls, _volume(seed=i), series_uid=f'case_{i}') for i in range(3)]
    verdicts.append(nc.cascade.run_cascade(_stub_seg(-10.), cls, _volume(), series_uid='quiet'))

    nc.cascade.write_verdicts(tmp_path / 'verdicts.csv', verdicts)
    nc.cascade.write_slice_probabilities(tmp_path / 'slice_probs.csv', verdicts)
    assert (tmp_path / 'verdicts.csv').read_text().splitlines()[0] == \
        'seriesuid,case_score,label,n_suspicious_slices,no_findings'

    back = nc.cascade.read_verdicts(tmp_path / 'verdicts.csv',
                                    nc.cascade.read_slice_probabilities(tmp_path / 'slice_probs.csv'))
    assert back == verdicts
