import enum
from typing import Sequence

import numpy as np

from ..interfaces import GridVolume, MaskVolume, NoduleAnnotation

__all__ = ['MaskShape', 'rasterize_mask']


class MaskShape(enum.Enum):
    BALL = 'ball'
    """Closed 3D ball of the annotated diameter in world space"""

    DISK = 'disk'
    """Disk of the annotated diameter on every slice whose world z lies within the radius"""

    @staticmethod
    def values() -> Sequence[str]:
        return [s.value for s in MaskShape.__members__.values()]


def rasterize_mask(volume: GridVolume,
                   findings: Sequence[NoduleAnnotation],
                   shape: MaskShape = MaskShape.BALL) -> MaskVolume:
    """
    Rasterize findings onto the grid of a volume.

    A voxel is set iff the world distance from its center, origin + index * spacing, to some finding center is at
    most half the finding's diameter. The union over findings is returned, so the result does not depend on the
    order of the findings.

    :param volume: volume providing the grid
    :param findings: findings of this volume's series
    :param shape: BALL or DISK
    :return: a MaskVolume on the volume's grid
    """
    nz, ny, nx = volume.voxels.shape
    n = np.array([nx, ny, nz])
    origin = np.asarray(volume.origin)
    spacing = np.asarray(volume.spacing)
    out = np.zeros((nz, ny, nx), dtype=np.uint8)

    for f in findings:
        center = np.asarray(f.center_world)
        r = f.radius_mm
        r2 = r * r
        # one voxel of margin on each side of the bounding box
        lo = np.maximum(np.floor((center - r - origin) / spacing).astype(np.int64) - 1, 0)
        hi = np.minimum(np.ceil((center + r - origin) / spacing).astype(np.int64) + 1, n - 1)
        if np.any(lo > hi):
            continue

        dx2, dy2, dz2 = ((origin[k] + np.arange(lo[k], hi[k] + 1) * spacing[k] - center[k]) ** 2 for k in range(3))
        if shape == MaskShape.BALL:
            inside = dx2[None, None, :] + dy2[None, :, None] + dz2[:, None, None] <= r2
        else:
            disk = dx2[None, :] + dy2[:, None] <= r2
            inside = (dz2 <= r2)[:, None, None] & disk[None, :, :]

        box = (slice(lo[2], hi[2] + 1), slice(lo[1], hi[1] + 1), slice(lo[0], hi[0] + 1))
        out[box] |= inside.astype(np.uint8)

    return MaskVolume(voxels=out, origin=volume.origin, spacing=volume.spacing)
