import dataclasses
from typing import Tuple

from ..interfaces import CaseLabel, PhantomSpecError

__all__ = ['PhantomSpec']


@dataclasses.dataclass(frozen=True)
class PhantomSpec:
    """Parameters of the synthetic CT-like dataset."""

    dims: Tuple[int, int, int] = (64, 64, 32)
    """Voxel counts (nx, ny, nz)"""

    spacing: Tuple[float, float, float] = (1., 1., 3.)
    """Voxel spacing in mm (sx, sy, sz)"""

    background_mean: float = -800.
    """Mean background intensity in HU"""

    background_noise_sd: float = 60.
    """Std of the gaussian background noise in HU"""

    benign_diameter_range: Tuple[float, float] = (4., 8.)
    """Benign nodule diameters are drawn uniformly from this range (mm)"""

    malignant_diameter_range: Tuple[float, float] = (8., 16.)
    """Malignant nodule diameters are drawn uniformly from this range (mm)"""

    spiculation_amplitude: float = 0.3
    """Maximum radial spike length as a fraction of the radius, malignant nodules only"""

    nodule_intensity_mean: float = -100.
    """Mean nodule intensity in HU"""

    nodule_intensity_sd: float = 30.
    """Std of the nodule intensity in HU"""

    cases_per_class: int = 102
    """Number of benign cases, equal to the number of malignant cases"""

    seed: int = 0
    """Root seed; case i uses the substream ('phantom', i)"""

    def __post_init__(self) -> None:
        if len(self.dims) != 3 or min(self.dims) < 1:
            raise PhantomSpecError(f'dims must be three positive voxel counts, got {self.dims}')
        if len(self.spacing) != 3 or not all(s > 0 for s in self.spacing):
            raise PhantomSpecError(f'spacing must be three positive values, got {self.spacing}')
        for name in ('benign_diameter_range', 'malignant_diameter_range'):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise PhantomSpecError(f'{name} needs 0 < lower <= upper, got {(lo, hi)}')
        if not 0. <= self.spiculation_amplitude < 1.:
            raise PhantomSpecError(f'spiculation_amplitude must lie in [0, 1), got {self.spiculation_amplitude}')
        if self.background_noise_sd < 0 or self.nodule_intensity_sd < 0:
            raise PhantomSpecError('intensity standard deviations must be non-negative')
        if self.cases_per_class < 1:
            raise PhantomSpecError(f'cases_per_class must be >= 1, got {self.cases_per_class}')

    def diameter_range(self, label: CaseLabel) -> Tuple[float, float]:
        return self.malignant_diameter_range if label == CaseLabel.MALIGNANT else self.benign_diameter_range

    @property
    def extent_mm(self) -> Tuple[float, float, float]:
        """World distance between the first and last voxel center along each axis"""
        return tuple((n - 1) * s for n, s in zip(self.dims, self.spacing))  # type: ignore

    def check_fits(self) -> None:
        """Raise PhantomSpecError if the largest nodule cannot be placed a diameter away from every border."""
        largest = max(self.benign_diameter_range[1], self.malignant_diameter_range[1])
        for axis, extent in zip('xyz', self.extent_mm):
            if extent < 2 * largest:
                raise PhantomSpecError(f'dims too small: the {axis} extent {extent} mm cannot hold a {largest} mm '
                                       f'nodule placed a diameter away from both borders')

    def label_of(self, index: int) -> CaseLabel:
        """Case labels alternate benign, malignant, benign, ..."""
        return CaseLabel.MALIGNANT if index % 2 else CaseLabel.BENIGN

    @property
    def n_cases(self) -> int:
        return 2 * self.cases_per_class
