# flake8: noqa

from .experiments import *
