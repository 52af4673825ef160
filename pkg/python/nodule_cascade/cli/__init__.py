# flake8: noqa

from .commands import *
from .main import *
from .run_config import *
