# flake8: noqa

from .phantom_factory import *
from .phantom_spec import *
