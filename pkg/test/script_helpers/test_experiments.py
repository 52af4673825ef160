from pathlib import Path

import pytest

import nodule_cascade as nc

_OPTS = nc.sh.ExperimentOpts(
    spec=nc.phantom.PhantomSpec(dims=(32, 32, 16), benign_diameter_range=(3., 5.), malignant_diameter_range=(6., 8.),
                                cases_per_class=5, seed=1),
    seg_train=nc.training.TrainConfig(epochs=1, batch_size=8),
    cls_train=nc.training.TrainConfig(epochs=1, batch_size=8),
    seg_width=4,
    threshold=0.)


@pytest.mark.INTEGRATION_TEST
def test_phantom_experiment(tmp_path: Path) -> None:
    result = nc.sh.phantom_experiment_main(_OPTS, out_dir=tmp_path)

    assert 0. <= result.pixel_roc.auc <= 1.
    assert [row.name for row in result.comparison.rows] == [a.value for a in _OPTS.archs]
    assert set(result.cls_checkpoints) == set(_OPTS.archs)
    for ckpt in result.cls_checkpoints.values():
        assert ckpt.meta.notes['split_digest'] == result.cls_checkpoints[_OPTS.archs[0]].meta.notes['split_digest']
    assert result.seg_checkpoint.arch_id == nc.interfaces.ArchID.UNET_SEG

    assert nc.models.load_checkpoint(tmp_path / 'seg' / 'checkpoint').digest == result.seg_checkpoint.digest
    for arch in _OPTS.archs:
        assert (tmp_path / arch.value / 'checkpoint').is_dir()
    assert (tmp_path / 'report.csv').exists()
    assert (tmp_path / 'roc_pixel.csv').exists()

    again = nc.sh.phantom_experiment_main(_OPTS)
    assert again.seg_checkpoint.digest == result.seg_checkpoint.digest
    assert {a: c.digest for a, c in again.cls_checkpoints.items()} == \
           {a: c.digest for a, c in result.cls_checkpoints.items()}
    assert again.comparison.to_frame().equals(result.comparison.to_frame())
