# flake8: noqa

from .interfaces import *
from .h5_prob_map_saver import *
from .h5_prob_map_loader import *
