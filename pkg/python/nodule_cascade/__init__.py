# flake8: noqa

from . import annotations
from . import cascade
from . import cli
from . import data
from . import evaluation
from . import interfaces
from . import models
from . import phantom
from . import script_helpers
from . import training
from . import utils
from . import volume

sh = script_helpers
init_globals = utils.init_globals
