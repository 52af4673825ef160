# flake8: noqa

from .checkpoint_io import *
from .layers import *
from .model_factory import *
from .networks import *
