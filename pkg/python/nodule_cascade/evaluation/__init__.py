# flake8: noqa

from .metrics import *
from .report import *
from .roc import *
