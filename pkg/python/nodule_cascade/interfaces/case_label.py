from enum import Enum

__all__ = ['CaseLabel']


class CaseLabel(Enum):
    """Case-level ground truth. Malignant is the positive class throughout."""
    BENIGN = 'benign'
    MALIGNANT = 'malignant'

    @property
    def target(self) -> int:
        """One-hot index of the label (benign=0, malignant=1)"""
        return int(self == CaseLabel.MALIGNANT)

    @staticmethod
    def from_target(target: int) -> 'CaseLabel':
        return CaseLabel.MALIGNANT if target else CaseLabel.BENIGN
