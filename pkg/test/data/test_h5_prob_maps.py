from pathlib import Path

import numpy as np
import pytest

import nodule_cascade as nc


def _record(uid: str, k: int, seed: int = 0) -> nc.data.ProbMapRecord:
    maps = np.random.default_rng(seed).random((k, 8, 8)).astype(np.float32)
    return nc.data.ProbMapRecord(series_uid=uid, slice_indices=np.arange(k) + 2, prob_maps=maps,
                                 max_probs=maps.reshape(k, -1).max(axis=1))


@pytest.mark.UNIT_TEST
def test_h5_prob_maps_round_trip(tmp_path: Path) -> None:
    records = [_record('b', 3), _record('a', 2, seed=1)]
    saver = nc.data.H5ProbMapSaver('prob_maps.h5', tmp_path)
    for r in records:
        saver.record(r)
    saver.close()

    loader = nc.data.H5ProbMapLoader('prob_maps.h5', tmp_path)
    assert loader.series_uids() == ['b', 'a']
    for r in records:
        back = loader.get(r.series_uid)
        np.testing.assert_array_equal(back.slice_indices, r.slice_indices)
        np.testing.assert_array_equal(back.prob_maps, r.prob_maps)
        np.testing.assert_array_equal(back.max_probs, r.max_probs)
        assert back.slice_shape == (8, 8)
    with pytest.raises(KeyError):
        loader.get('missing')


@pytest.mark.UNIT_TEST
def test_h5_saver_refuses_existing_file_and_duplicates(tmp_path: Path) -> None:
    saver = nc.data.H5ProbMapSaver('prob_maps.h5', tmp_path)
    saver.record(_record('a', 1))
    with pytest.raises(ValueError, match='already recorded'):
        saver.record(_record('a', 1))
    saver.close()

    with pytest.raises(ValueError, match='already exists'):
        nc.data.H5ProbMapSaver('prob_maps.h5', tmp_path)
    saver = nc.data.H5ProbMapSaver('prob_maps.h5', tmp_path, overwrite=True)
    saver.close()
    assert nc.data.H5ProbMapLoader('prob_maps.h5', tmp_path).series_uids() == []


@pytest.mark.UNIT_TEST
def test_prob_map_record_shapes() -> None:
    with pytest.raises(nc.interfaces.ShapeMismatchError):
        nc.data.ProbMapRecord('a', np.arange(2), np.zeros((3, 8, 8)), np.zeros(2))
    with pytest.raises(nc.interfaces.ShapeMismatchError):
        nc.data.ProbMapRecord('a', np.arange(2), np.zeros((2, 8, 8)), np.zeros(3))
