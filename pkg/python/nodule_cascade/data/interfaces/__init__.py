# flake8: noqa

from .prob_map_saver import *
from .prob_map_loader import *
