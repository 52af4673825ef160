import math
from pathlib import Path
from typing import List

import numpy as np
import pytest
import torch

import nodule_cascade as nc

CaseLabel = nc.interfaces.CaseLabel


def _disk_slices(n: int, hw: int = 32, seed: int = 0) -> List[nc.interfaces.SliceSample]:
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[:hw, :hw]
    samples = []
    for i in range(n):
        cy, cx = rng.integers(8, hw - 8, size=2)
        mask = ((yy - cy) ** 2 + (xx - cx) ** 2 <= int(rng.integers(3, 6)) ** 2).astype(np.uint8)
        image = (0.15 + 0.05 * rng.random((hw, hw)) + 0.7 * mask).astype(np.float32)
        samples.append(nc.interfaces.SliceSample(image, mask, f'scan_{i}', i))
    return samples


def _fused(n: int, label: CaseLabel, hw: int = 8, seed: int = 0) -> List[nc.interfaces.FusedSample]:
    rng = np.random.default_rng(seed)
    return [nc.interfaces.FusedSample(nc.cascade.fuse_inputs(rng.random((hw, hw)), rng.random((hw, hw))),
                                      f'case_{i}', i, label) for i in range(n)]


def _seg_ckpt() -> nc.interfaces.ModelCheckpoint:
    return nc.models.checkpoint_from_model(nc.models.build_segmentation_net((16, 16), width=4))


@pytest.mark.UNIT_TEST
def test_train_config_validation() -> None:
    for kwargs in [dict(batch_size=0), dict(learning_rate=0.), dict(oversample_factor=0), dict(epochs=-1)]:
        with pytest.raises(nc.interfaces.ConfigError):
            nc.training.TrainConfig(**kwargs)  # type: ignore
    cfg = nc.training.TrainConfig()
    assert (cfg.batch_size, cfg.learning_rate, cfg.betas, cfg.eps, cfg.oversample_factor) == \
           (16, 1e-4, (0.9, 0.999), 1e-8, 3)


@pytest.mark.UNIT_TEST
def test_zero_epochs_returns_initialization() -> None:
    model = nc.models.build_segmentation_net((32, 32), seed=1, width=4)
    init = nc.models.checkpoint_from_model(nc.models.build_segmentation_net((32, 32), seed=1, width=4))
    ckpt, history = nc.training.train_segmentation(nc.training.TrainingData(_disk_slices(4)), model,
                                                   nc.training.TrainConfig(epochs=0))
    assert ckpt.digest == init.digest
    assert len(history) == 0
    assert ckpt.meta.best_epoch == 0


@pytest.mark.UNIT_TEST
def test_segmentation_training_is_deterministic() -> None:
    cfg = nc.training.TrainConfig(epochs=2, batch_size=2, seed=3)
    data = nc.training.TrainingData(_disk_slices(4), _disk_slices(2, seed=1))
    digests = []
    for _ in range(2):
        model = nc.models.build_segmentation_net((32, 32), seed=3, width=4)
        ckpt, history = nc.training.train_segmentation(data, model, cfg, notes={'split_digest': 'x'})
        digests.append(ckpt.digest)
        assert len(history) == 2
        assert all(math.isnan(r.val_accuracy) for r in history.records)
        assert not any(math.isnan(v) for v in history.val_losses)
        assert ckpt.meta.notes['split_digest'] == 'x'
    assert digests[0] == digests[1]


@pytest.mark.UNIT_TEST
def test_segmentation_training_errors() -> None:
    model = nc.models.build_segmentation_net((32, 32), width=4)
    with pytest.raises(nc.interfaces.TrainingError):
        nc.training.train_segmentation(nc.training.TrainingData([]), model, nc.training.TrainConfig())
    unlabeled = [nc.interfaces.SliceSample(np.zeros((32, 32), dtype=np.float32), None, 's', 0)]
    with pytest.raises(nc.interfaces.TrainingError):
        nc.training.train_segmentation(nc.training.TrainingData(unlabeled), model, nc.training.TrainConfig())
    with pytest.raises(nc.interfaces.TrainingError):
        nc.training.train_segmentation(nc.training.TrainingData(_disk_slices(1)), nc.models.build_baseline_fc((32, 32)),
                                       nc.training.TrainConfig())


@pytest.mark.INTEGRATION_TEST
def test_segmentation_overfits_toy_set() -> None:
    model = nc.models.build_segmentation_net((32, 32), seed=0, width=8, dropout=0.)
    cfg = nc.training.TrainConfig(epochs=500, batch_size=4, learning_rate=1e-3)
    ckpt, history = nc.training.train_segmentation(nc.training.TrainingData(_disk_slices(4)), model, cfg)
    losses = history.train_losses
    assert losses[-1] < 0.05
    assert np.mean(losses[:10]) > np.mean(losses[10:20])
    assert ckpt.meta.final_train_loss == pytest.approx(losses[-1])


@pytest.mark.UNIT_TEST
def test_classifier_learns_constant_benign_and_keeps_seg_weights() -> None:
    seg = _seg_ckpt()
    seg_blob = seg.blob
    model = nc.models.build_classifier_net((8, 8), seed=0, dropout=0.)
    cfg = nc.training.TrainConfig(epochs=100, batch_size=8, learning_rate=1e-2)
    data = nc.training.TrainingData(_fused(8, CaseLabel.BENIGN), _fused(4, CaseLabel.BENIGN, seed=1))
    ckpt, history = nc.training.train_classifier(data, seg, model, cfg)

    assert seg.blob == seg_blob
    assert ckpt.meta.notes['seg_digest'] == seg.digest
    assert history.train_losses[-1] < 0.05
    assert history.records[-1].val_accuracy == 1.
    probs = nc.models.forward(nc.models.model_from_checkpoint(ckpt),
                              np.stack([s.fused.channels for s in _fused(5, CaseLabel.BENIGN, seed=2)]))
    assert np.all(probs[:, 0] > 0.5)


@pytest.mark.UNIT_TEST
def test_classifier_training_errors() -> None:
    seg = _seg_ckpt()
    cfg = nc.training.TrainConfig(epochs=1)
    with pytest.raises(nc.interfaces.TrainingError, match='empty training set'):
        nc.training.train_classifier(nc.training.TrainingData([]), seg, nc.models.build_classifier_net((8, 8)), cfg)
    with pytest.raises(nc.interfaces.TrainingError):
        nc.training.train_classifier(nc.training.TrainingData(_fused(2, CaseLabel.BENIGN)), seg,
                                     nc.models.build_segmentation_net((16, 16), width=4), cfg)
    cls_ckpt = nc.models.checkpoint_from_model(nc.models.build_classifier_net((8, 8)))
    with pytest.raises(nc.interfaces.TrainingError):
        nc.training.train_classifier(nc.training.TrainingData(_fused(2, CaseLabel.BENIGN)), cls_ckpt,
                                     nc.models.build_classifier_net((8, 8)), cfg)
    with pytest.raises(nc.interfaces.ShapeMismatchError):
        nc.interfaces.FusedInput(np.zeros((3, 8, 8)))


@pytest.mark.UNIT_TEST
def test_history_file_round_trip(tmp_path: Path) -> None:
    history = nc.training.TrainHistory([nc.training.EpochRecord(1, 0.5, 0.6, math.nan),
                                        nc.training.EpochRecord(2, 0.25, 0.125, 0.75)])
    nc.training.write_history(tmp_path / 'history.csv', history)
    assert (tmp_path / 'history.csv').read_text().splitlines()[0] == 'epoch,train_loss,val_loss,val_accuracy'
    back = nc.training.read_history(tmp_path / 'history.csv')
    assert len(back) == 2
    assert back.records[1] == history.records[1]
    assert math.isnan(back.records[0].val_accuracy)


@pytest.mark.UNIT_TEST
def test_adam_step_with_zero_learning_rate_keeps_parameters() -> None:
    model = nc.models.build_classifier_net((8, 8))
    before = nc.models.checkpoint_from_model(model).digest
    optimizer = torch.optim.Adam(model.parameters(), lr=0.)
    x = torch.from_numpy(np.stack([s.fused.channels for s in _fused(4, CaseLabel.MALIGNANT)]).astype(np.float32))
    nc.training.class_cross_entropy(model(x), torch.ones(4)).backward()
    optimizer.step()
    assert nc.models.checkpoint_from_model(model).digest == before
