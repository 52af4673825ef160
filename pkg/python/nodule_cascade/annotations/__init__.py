# flake8: noqa

from .annotation_table import *
from .masks import *
from .slices import *
