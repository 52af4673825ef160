# flake8: noqa

from .gradient_check import *
from .losses import *
from .oversampling import *
from .splits import *
from .trainer import *
