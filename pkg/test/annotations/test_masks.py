import itertools
from typing import List

import numpy as np
import pytest

import nodule_cascade as nc


def _grid() -> nc.interfaces.CtVolume:
    dims, spacing, origin = (24, 20, 10), (0.98, 0.98, 3.0), (-12., 4., -30.)
    nx, ny, nz = dims
    return nc.interfaces.CtVolume(voxels=np.zeros((nz, ny, nx)), origin=origin, spacing=spacing)


def _brute_force(volume: nc.interfaces.GridVolume, findings: List[nc.interfaces.NoduleAnnotation]) -> np.ndarray:
    nz, ny, nx = volume.voxels.shape
    out = np.zeros((nz, ny, nx), dtype=np.uint8)
    for z, y, x in itertools.product(range(nz), range(ny), range(nx)):
        for f in findings:
            d = [volume.origin[k] + i * volume.spacing[k] - f.center_world[k] for k, i in enumerate((x, y, z))]
            if d[0] ** 2 + d[1] ** 2 + d[2] ** 2 <= f.radius_mm ** 2:
                out[z, y, x] = 1
                break
    return out


@pytest.mark.UNIT_TEST
def test_rasterize_no_findings() -> None:
    mask = nc.annotations.rasterize_mask(_grid(), [])
    assert mask.n_set == 0


@pytest.mark.UNIT_TEST
def test_rasterize_degenerate_ball_sets_one_voxel() -> None:
    vol = _grid()
    center = nc.volume.voxel_to_world(vol, (5, 7, 3))
    mask = nc.annotations.rasterize_mask(vol, [nc.interfaces.NoduleAnnotation('s', center, 0.5)])
    assert mask.n_set == 1
    assert mask.voxels[3, 7, 5] == 1


@pytest.mark.UNIT_TEST
def test_rasterize_ball_outside_grid() -> None:
    vol = _grid()
    far = nc.interfaces.NoduleAnnotation('s', (1000., 1000., 1000.), 10.)
    assert nc.annotations.rasterize_mask(vol, [far]).n_set == 0


@pytest.mark.UNIT_TEST
def test_rasterize_matches_brute_force_scan() -> None:
    vol = _grid()
    rng = np.random.default_rng(3)
    lo = np.asarray(vol.origin) - 5.
    hi = np.asarray(nc.volume.voxel_to_world(vol, vol.dims)) + 5.
    findings = [nc.interfaces.NoduleAnnotation('s', tuple(rng.uniform(lo, hi)), float(rng.uniform(0.5, 12.)))
                for _ in range(100)]
    mask = nc.annotations.rasterize_mask(vol, findings)
    np.testing.assert_array_equal(mask.voxels, _brute_force(vol, findings))


@pytest.mark.UNIT_TEST
def test_rasterize_union_is_order_independent() -> None:
    vol = _grid()
    findings = [nc.interfaces.NoduleAnnotation('s', nc.volume.voxel_to_world(vol, (i * 4, i * 3, i)), 4. + i)
                for i in range(5)]
    a = nc.annotations.rasterize_mask(vol, findings)
    b = nc.annotations.rasterize_mask(vol, findings[::-1])
    np.testing.assert_array_equal(a.voxels, b.voxels)


@pytest.mark.UNIT_TEST
def test_disk_shape_contains_ball() -> None:
    vol = _grid()
    finding = nc.interfaces.NoduleAnnotation('s', nc.volume.voxel_to_world(vol, (12, 10, 5)), 9.)
    ball = nc.annotations.rasterize_mask(vol, [finding], nc.annotations.MaskShape.BALL)
    disk = nc.annotations.rasterize_mask(vol, [finding], nc.annotations.MaskShape.DISK)
    assert np.all(disk.voxels >= ball.voxels)
    assert disk.n_set > ball.n_set


def _full_grid(volume: nc.interfaces.GridVolume, findings: List[nc.interfaces.NoduleAnnotation]) -> np.ndarray:
    nz, ny, nx = volume.voxels.shape
    axes = [volume.origin[k] + np.arange(n) * volume.spacing[k] for k, n in enumerate((nx, ny, nz))]
    out = np.zeros((nz, ny, nx), dtype=bool)
    for f in findings:
        dx2, dy2, dz2 = ((axes[k] - f.center_world[k]) ** 2 for k in range(3))
        out |= dx2[None, None, :] + dy2[None, :, None] + dz2[:, None, None] <= f.radius_mm ** 2
    return out.astype(np.uint8)


@pytest.mark.UNIT_TEST
def test_rasterize_matches_full_grid_on_random_grids() -> None:
    rng = np.random.default_rng(11)
    for _ in range(100):
        nx, ny, nz = (int(v) for v in rng.integers(1, 65, size=3))
        spacing = tuple(float(s) for s in rng.uniform(0.4, 3.5, size=3))
        origin = tuple(float(o) for o in rng.uniform(-250., 250., size=3))
        vol = nc.interfaces.CtVolume(voxels=np.zeros((nz, ny, nx)), origin=origin, spacing=spacing)
        lo = np.asarray(origin) - 10.
        hi = np.asarray(origin) + np.asarray(spacing) * np.array([nx, ny, nz]) + 10.
        findings = [nc.interfaces.NoduleAnnotation('s', tuple(float(c) for c in rng.uniform(lo, hi)),
                                                   float(rng.uniform(0.3, 30.)))
                    for _ in range(int(rng.integers(1, 4)))]
        mask = nc.annotations.rasterize_mask(vol, findings)
        np.testing.assert_array_equal(mask.voxels, _full_grid(vol, findings))
