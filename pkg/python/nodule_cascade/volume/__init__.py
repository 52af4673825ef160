# flake8: noqa

from .volume_io import *
