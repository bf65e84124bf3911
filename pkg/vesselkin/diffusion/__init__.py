from .neumann import *  # noqa
from .oracle import *  # noqa
