# flake8: noqa

from .pipeline import *
from .screening import *
