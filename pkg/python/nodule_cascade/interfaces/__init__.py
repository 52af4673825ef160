# flake8: noqa

from . import globals
from .annotation import *
from .case_label import *
from .checkpoint import *
from .errors import *
from .screening import *
from .volumes import *
