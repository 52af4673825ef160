__all__ = ['CascadeError', 'VolumeFormatError', 'AnnotationFormatError', 'PhantomSpecError', 'ShapeMismatchError',
           'CheckpointError', 'TrainingError', 'SplitMismatchError', 'SingleClassError', 'ConfigError']


class CascadeError(Exception):
    """Base class of all errors raised by nodule_cascade"""


class VolumeFormatError(CascadeError, ValueError):
    """A volume header or raw file does not follow the volume format"""


class AnnotationFormatError(CascadeError, ValueError):
    """An annotation or label table is malformed"""


class PhantomSpecError(CascadeError, ValueError):
    """A phantom spec cannot be realized"""


class ShapeMismatchError(CascadeError, ValueError):
    """Array or tensor shapes do not match what an operation expects"""

    def __init__(self, what: str, expected: object, actual: object):
        super().__init__(f'{what}: expected {expected}, got {actual}')
        self.expected = expected
        self.actual = actual


class CheckpointError(CascadeError):
    """A checkpoint is corrupted or does not fit the model it is used with"""


class TrainingError(CascadeError):
    """Training cannot start or did not converge to a finite loss"""


class SplitMismatchError(CascadeError):
    """Networks were trained on different splits or seeds and cannot be compared"""


class SingleClassError(CascadeError, ValueError):
    """ROC analysis needs at least one positive and one negative item"""


class ConfigError(CascadeError, ValueError):
    """A run configuration value is missing or invalid"""
