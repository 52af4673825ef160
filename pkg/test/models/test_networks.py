from typing import Tuple

import numpy as np
import pytest
import torch
from torch import nn

import nodule_cascade as nc

ArchID = nc.interfaces.ArchID


def _batch(n: int, c: int, hw: int, seed: int = 0) -> np.ndarray:
    return np.random.default_rng(seed).random((n, c, hw, hw)).astype(np.float32)


@pytest.mark.UNIT_TEST
@pytest.mark.parametrize(['arch', 'expected'], [[ArchID.UNET_SEG, 15670785],
                                                [ArchID.CASCADE_CLS, 268490],
                                                [ArchID.BASELINE_FC, 1048962],
                                                [ArchID.BASELINE_ENCDEC, 769995]])
def test_parameter_counts_at_64(arch: ArchID, expected: int) -> None:
    model = nc.models.ModelFactory.build(arch, (64, 64))
    assert nc.models.count_parameters(model) == expected
    assert nc.models.expected_parameter_count(arch, (64, 64)) == expected


@pytest.mark.UNIT_TEST
@pytest.mark.parametrize('arch', [ArchID.UNET_SEG, ArchID.BASELINE_ENCDEC])
def test_transpose_upsampling_parameter_count(arch: ArchID) -> None:
    model = nc.models.ModelFactory.build(arch, (32, 32), width=4, upsample='transpose')
    assert nc.models.count_parameters(model) == nc.models.expected_parameter_count(arch, (32, 32), 'transpose', 4)


@pytest.mark.UNIT_TEST
def test_count_parameters_small_modules() -> None:
    assert nc.models.count_parameters(nn.Sequential()) == 0
    assert nc.models.count_parameters(nn.Linear(2, 2)) == 6


@pytest.mark.UNIT_TEST
def test_baseline_fc_formula() -> None:
    for h, w in [(8, 8), (16, 32)]:
        model = nc.models.build_baseline_fc((h, w))
        assert nc.models.count_parameters(model) == (2 * h * w + 1) * 128 + 129 * 2


@pytest.mark.UNIT_TEST
def test_segmentation_net_shape_and_range() -> None:
    model = nc.models.build_segmentation_net((64, 64), width=8)
    out = nc.models.forward(model, _batch(16, 1, 64))
    assert out.shape == (16, 64, 64)
    assert out.min() >= 0. and out.max() <= 1.
    assert model.body.widths == (8, 16, 32, 64, 128)
    assert nc.models.build_segmentation_net((64, 64)).body.widths == (64, 128, 256, 512, 1024)


@pytest.mark.UNIT_TEST
@pytest.mark.parametrize('arch', [ArchID.CASCADE_CLS, ArchID.BASELINE_FC, ArchID.BASELINE_ENCDEC])
def test_classifier_outputs_are_probabilities(arch: ArchID) -> None:
    model = nc.models.ModelFactory.build(arch, (64, 64))
    out = nc.models.forward(model, _batch(4, 2, 64))
    assert out.shape == (4, 2)
    assert np.all(out >= 0.)
    np.testing.assert_allclose(out.sum(axis=1), 1., atol=1e-6)


@pytest.mark.UNIT_TEST
def test_builders_match_factory() -> None:
    for build, arch in [(nc.models.build_baseline_encdec, ArchID.BASELINE_ENCDEC),
                        (nc.models.build_baseline_fc, ArchID.BASELINE_FC),
                        (nc.models.build_classifier_net, ArchID.CASCADE_CLS)]:
        a = nc.models.checkpoint_from_model(build((32, 32), 2))
        b = nc.models.checkpoint_from_model(nc.models.ModelFactory.build(arch, (32, 32), 2))
        assert a.arch_id == arch
        assert a.digest == b.digest


@pytest.mark.UNIT_TEST
def test_classifier_flatten_size() -> None:
    assert nc.models.build_classifier_net((64, 64)).flat_features == 2048


@pytest.mark.UNIT_TEST
def test_zero_head_gives_sigmoid_of_bias() -> None:
    model = nc.models.build_segmentation_net((16, 16), width=4)
    with torch.no_grad():
        model.head.weight.zero_()
        model.head.bias.fill_(0.3)
    out = nc.models.forward(model, _batch(2, 1, 16))
    np.testing.assert_allclose(out, 1. / (1. + np.exp(-0.3)), rtol=1e-6)


@pytest.mark.UNIT_TEST
@pytest.mark.parametrize(['arch', 'bad_shape'], [[ArchID.UNET_SEG, (1, 2, 16, 16)],
                                                 [ArchID.UNET_SEG, (1, 1, 32, 32)],
                                                 [ArchID.CASCADE_CLS, (1, 1, 16, 16)],
                                                 [ArchID.BASELINE_FC, (16, 16)]])
def test_forward_rejects_wrong_shape(arch: ArchID, bad_shape: Tuple[int, ...]) -> None:
    model = nc.models.ModelFactory.build(arch, (16, 16), width=4) if arch == ArchID.UNET_SEG \
        else nc.models.ModelFactory.build(arch, (16, 16))
    with pytest.raises(nc.interfaces.ShapeMismatchError):
        nc.models.forward(model, np.zeros(bad_shape, dtype=np.float32))


@pytest.mark.UNIT_TEST
@pytest.mark.parametrize(['arch', 'hw'], [[ArchID.UNET_SEG, (24, 24)], [ArchID.CASCADE_CLS, (12, 12)],
                                          [ArchID.BASELINE_ENCDEC, (40, 40)]])
def test_indivisible_input_rejected(arch: ArchID, hw: Tuple[int, int]) -> None:
    with pytest.raises(nc.interfaces.ShapeMismatchError):
        nc.models.ModelFactory.build(arch, hw)


@pytest.mark.UNIT_TEST
def test_unknown_arch_rejected() -> None:
    with pytest.raises(ValueError):
        nc.models.ModelFactory.build('resnet50', (64, 64))


@pytest.mark.UNIT_TEST
def test_build_is_seed_deterministic() -> None:
    a = nc.models.build_classifier_net((16, 16), seed=3)
    b = nc.models.build_classifier_net((16, 16), seed=3)
    c = nc.models.build_classifier_net((16, 16), seed=4)
    for (_, pa), (_, pb), (_, pc) in zip(a.named_parameters(), b.named_parameters(), c.named_parameters()):
        assert torch.equal(pa, pb)
    assert not torch.equal(a.fc.weight, c.fc.weight)


@pytest.mark.UNIT_TEST
def test_inference_forward_is_repeatable_and_ignores_dropout_seed() -> None:
    model = nc.models.build_classifier_net((16, 16))
    x = _batch(3, 2, 16)
    first = nc.models.forward(model, x)
    model.set_dropout_generator(torch.Generator().manual_seed(123))
    second = nc.models.forward(model, x)
    assert first.tobytes() == second.tobytes()


@pytest.mark.UNIT_TEST
def test_training_mode_dropout_follows_generator() -> None:
    model = nc.models.build_classifier_net((16, 16)).train()
    x = _batch(3, 2, 16)
    outs = []
    for _ in range(2):
        model.set_dropout_generator(torch.Generator().manual_seed(7))
        outs.append(nc.models.forward(model, x))
    assert outs[0].tobytes() == outs[1].tobytes()


@pytest.mark.UNIT_TEST
def test_baseline_differs_from_classifier() -> None:
    x = _batch(4, 2, 16)
    cls = nc.models.forward(nc.models.build_classifier_net((16, 16)), x)
    fc = nc.models.forward(nc.models.build_baseline_fc((16, 16)), x)
    assert not np.allclose(cls, fc)


@pytest.mark.UNIT_TEST
def test_layer_table() -> None:
    table = nc.models.layer_table(nc.models.build_segmentation_net((16, 16), width=4))
    convs = table[table['kind'] == 'conv3x3']['channels_out'].tolist()
    assert convs == [4, 8, 16, 32, 64, 32, 16, 8, 4]
    assert (table['kind'] == 'maxpool2x2').sum() == 4
    assert (table['kind'] == 'dropout').sum() == 2
    assert table['kind'].iloc[-1] == 'sigmoid'

    cls_table = nc.models.layer_table(nc.models.build_classifier_net((64, 64)))
    assert cls_table['kind'].iloc[-1] == 'softmax'
    assert 2048 in cls_table[cls_table['kind'] == 'flatten']['channels_out'].tolist()
